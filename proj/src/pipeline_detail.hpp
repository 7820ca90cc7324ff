#pragma once

#include "asap/pipeline.hpp"

namespace asap::detail {

/// Row fields known when a package is cut.
package_metrics stamp(const emission& em, const gamma_state& gs, std::uint64_t filter_drops,
                      std::uint64_t overflow_drops);

/// Fills processing time and lag from consumer feedback.
void finish(package_metrics& m, const processing_feedback& fb);

run_result run_realtime(const pipeline_config& config, stream_source& source, consumer& algorithm);

} // namespace asap::detail
