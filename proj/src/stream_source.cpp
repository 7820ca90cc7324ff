#include "asap/stream_source.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace asap {

namespace {

void check_geometry(const sensor_geometry& g)
{
    if (g.width < 1)
        throw config_error("sensor.width", "must be >= 1");
    if (g.height < 1)
        throw config_error("sensor.height", "must be >= 1");
}

template <typename T>
bool parse_field(std::string_view text, T& value)
{
    if (text.empty())
        return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc{} && ptr == last;
}

constexpr std::string_view csv_header = "t_us,x,y,p";

} // namespace

// poisson_source --------------------------------------------------------------

poisson_source::poisson_source(double rate_start, double rate_end, double duration_s,
                               sensor_geometry geometry, std::uint64_t seed)
    : rate_start_(rate_start),
      slope_(0.0),
      duration_(duration_s),
      geometry_(geometry),
      rng_(rng::split(seed, 0))
{
    if (!(rate_start > 0.0))
        throw config_error("source.rate_start", "rate must be > 0");
    if (!(rate_end > 0.0))
        throw config_error("source.rate_end", "rate must be > 0");
    if (!(duration_s > 0.0))
        throw config_error("source.duration_s", "duration must be > 0");
    check_geometry(geometry);
    slope_ = (rate_end - rate_start) / duration_s;
}

std::optional<event> poisson_source::next()
{
    if (intensity_ < 0.0)
        return std::nullopt;

    const std::uint64_t bits = rng_.next_u64();
    intensity_ += -std::log1p(-static_cast<double>(bits >> 11) * 0x1.0p-53);

    // Solve r0*t + slope*t^2/2 = L in its cancellation-free form.
    const double disc = rate_start_ * rate_start_ + 2.0 * slope_ * intensity_;
    const double t = disc < 0.0 ? duration_ : 2.0 * intensity_ / (rate_start_ + std::sqrt(disc));
    if (t >= duration_) {
        intensity_ = -1.0;
        return std::nullopt;
    }

    const std::uint64_t pix = rng_.next_u64();
    event e;
    e.t = static_cast<time_us>(std::floor(t * 1e6));
    e.x = static_cast<std::uint16_t>(rng::bounded(static_cast<std::uint32_t>(pix), geometry_.width));
    e.y = static_cast<std::uint16_t>(rng::bounded(static_cast<std::uint32_t>(pix >> 32), geometry_.height));
    // The low 11 bits of the arrival draw are unused by the exponential.
    e.polarity = (bits & 1U) ? 1 : -1;
    return e;
}

std::unique_ptr<stream_source> generate_constant_stream(double rate, double duration_s,
                                                        sensor_geometry geometry,
                                                        std::uint64_t seed)
{
    if (!(rate > 0.0))
        throw config_error("source.rate", "rate must be > 0");
    return std::make_unique<poisson_source>(rate, rate, duration_s, geometry, seed);
}

std::unique_ptr<stream_source> generate_ramp_stream(double rate_start, double rate_end,
                                                    double duration_s, sensor_geometry geometry,
                                                    std::uint64_t seed)
{
    return std::make_unique<poisson_source>(rate_start, rate_end, duration_s, geometry, seed);
}

// CSV -------------------------------------------------------------------------

event parse_event_line(std::string_view line, std::size_t line_no, sensor_geometry geometry)
{
    std::string_view fields[4];
    std::size_t n = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            if (n == 4)
                throw parse_error(line_no, "expected 4 fields");
            fields[n++] = line.substr(start, i - start);
            start = i + 1;
        }
    }
    if (n != 4)
        throw parse_error(line_no, "expected 4 fields");

    std::int64_t t = 0;
    unsigned x = 0;
    unsigned y = 0;
    int p = 0;
    if (!parse_field(fields[0], t) || t < 0)
        throw parse_error(line_no, "bad timestamp '" + std::string(fields[0]) + "'");
    if (!parse_field(fields[1], x) || x >= geometry.width)
        throw parse_error(line_no, "bad x '" + std::string(fields[1]) + "'");
    if (!parse_field(fields[2], y) || y >= geometry.height)
        throw parse_error(line_no, "bad y '" + std::string(fields[2]) + "'");
    if (!parse_field(fields[3], p) || (p != 1 && p != -1))
        throw parse_error(line_no, "bad polarity '" + std::string(fields[3]) + "'");

    return event{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                 static_cast<std::int8_t>(p)};
}

std::string format_event(const event& e)
{
    std::string s = std::to_string(e.t);
    s += ',';
    s += std::to_string(e.x);
    s += ',';
    s += std::to_string(e.y);
    s += e.polarity > 0 ? ",1" : ",-1";
    return s;
}

file_source::file_source(const std::filesystem::path& path, sensor_geometry geometry)
    : in_(path, std::ios::binary), geometry_(geometry)
{
    check_geometry(geometry);
    if (!in_)
        throw config_error("source.path", "cannot open '" + path.string() + "'");
}

std::optional<event> file_source::next()
{
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line_no_ == 1 && line == csv_header)
            continue;
        event e = parse_event_line(line, line_no_, geometry_);
        if (any_ && e.t < last_t_)
            throw ordering_error("line " + std::to_string(line_no_) + ": timestamp " +
                                 std::to_string(e.t) + " precedes " + std::to_string(last_t_));
        any_ = true;
        last_t_ = e.t;
        return e;
    }
    return std::nullopt;
}

std::unique_ptr<stream_source> read_event_file(const std::filesystem::path& path,
                                               sensor_geometry geometry)
{
    return std::make_unique<file_source>(path, geometry);
}

event_writer::event_writer(std::ostream& out) : out_(out)
{
    out_ << csv_header << '\n';
}

void event_writer::write(const event& e)
{
    out_ << format_event(e) << '\n';
}

void write_event_file(const std::filesystem::path& path, std::span<const event> events)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw config_error("events_out", "cannot write '" + path.string() + "'");
    event_writer writer(out);
    for (const auto& e : events)
        writer.write(e);
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

} // namespace asap
