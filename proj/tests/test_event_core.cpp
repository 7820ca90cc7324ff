#include "asap/stream_source.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace asap;

namespace {

std::vector<event> drain(stream_source& src)
{
    std::vector<event> out;
    while (auto e = src.next())
        out.push_back(*e);
    return out;
}

std::size_t count(stream_source& src)
{
    std::size_t n = 0;
    while (src.next())
        ++n;
    return n;
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents)
{
    auto p = std::filesystem::temp_directory_path() / ("asap_test_" + name);
    std::ofstream(p, std::ios::binary) << contents;
    return p;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool non_decreasing(const std::vector<event>& evs)
{
    for (std::size_t i = 1; i < evs.size(); ++i)
        if (evs[i].t < evs[i - 1].t)
            return false;
    return true;
}

} // namespace

TEST_SUITE("event_core")
{
    TEST_CASE("constant stream count lies within 4 sigma of rate*duration")
    {
        // Poisson(1e6): sigma = 1000.
        auto src = generate_constant_stream(1e6, 1.0, {}, 42);
        const auto n = count(*src);
        CHECK(n >= 996'000);
        CHECK(n <= 1'004'000);
    }

    TEST_CASE("same seed gives identical streams, different seed does not")
    {
        auto a = generate_constant_stream(1e6, 0.2, {}, 9);
        auto b = generate_constant_stream(1e6, 0.2, {}, 9);
        auto c = generate_constant_stream(1e6, 0.2, {}, 10);
        const auto ea = drain(*a);
        const auto eb = drain(*b);
        CHECK(ea == eb);
        CHECK(ea != drain(*c));
    }

    TEST_CASE("generated pixels respect geometry and polarity is +-1")
    {
        auto src = generate_constant_stream(1e6, 0.1, {}, 3);
        std::size_t pos = 0;
        std::size_t total = 0;
        bool ok = true;
        while (auto e = src->next()) {
            ok = ok && e->x < 346 && e->y < 260 && (e->polarity == 1 || e->polarity == -1);
            pos += e->polarity > 0;
            ++total;
        }
        CHECK(ok);
        CHECK(std::fabs(static_cast<double>(pos) / static_cast<double>(total) - 0.5) < 0.01);

        auto small = generate_constant_stream(1e5, 0.1, sensor_geometry{3, 2}, 3);
        bool seen_corner = false;
        while (auto e = small->next()) {
            REQUIRE(e->x < 3);
            REQUIRE(e->y < 2);
            seen_corner = seen_corner || (e->x == 2 && e->y == 1);
        }
        CHECK(seen_corner);
    }

    TEST_CASE("ramp count matches the integral of the linear rate")
    {
        // Integral of 1e5 -> 1e7 over 5 s = 2.525e7; sigma = sqrt(2.525e7) ~ 5025.
        const double expected = (1e5 + 1e7) / 2.0 * 5.0;
        const double bound = 4.0 * std::sqrt(expected);
        auto src = generate_ramp_stream(1e5, 1e7, 5.0, {}, 11);
        const auto n = static_cast<double>(count(*src));
        CHECK(std::fabs(n - expected) <= bound);
    }

    TEST_CASE("ramp instantaneous rate follows the interpolation")
    {
        // Counts in the first and last 0.5 s: integral of the rate over each slice.
        auto src = generate_ramp_stream(1e5, 1e6, 2.0, {}, 5);
        std::size_t first = 0;
        std::size_t last = 0;
        while (auto e = src->next()) {
            if (e->t < 500'000)
                ++first;
            if (e->t >= 1'500'000)
                ++last;
        }
        const double slope = (1e6 - 1e5) / 2.0;
        const double exp_first = 1e5 * 0.5 + slope * 0.5 * 0.5 / 2.0;
        const double exp_last = (1e5 * 2.0 + slope * 2.0 * 2.0 / 2.0) - (1e5 * 1.5 + slope * 1.5 * 1.5 / 2.0);
        CHECK(std::fabs(first - exp_first) <= 4.0 * std::sqrt(exp_first));
        CHECK(std::fabs(last - exp_last) <= 4.0 * std::sqrt(exp_last));
    }

    TEST_CASE("degenerate ramp behaves like a constant stream")
    {
        double ramp_mean = 0.0;
        double const_mean = 0.0;
        constexpr int seeds = 40;
        for (int s = 0; s < seeds; ++s) {
            auto r = generate_ramp_stream(2e4, 2e4, 1.0, {}, s);
            auto c = generate_constant_stream(2e4, 1.0, {}, 1000 + s);
            ramp_mean += static_cast<double>(count(*r)) / seeds;
            const_mean += static_cast<double>(count(*c)) / seeds;
        }
        // Each mean has sd sqrt(2e4/40) ~ 22; difference sd ~ 32.
        CHECK(std::fabs(ramp_mean - const_mean) < 4.0 * 32.0);
        CHECK(std::fabs(ramp_mean - 2e4) < 4.0 * 22.4);
    }

    TEST_CASE("mean count over 100 seeds is within 1% of rate*duration")
    {
        double mean = 0.0;
        for (int s = 0; s < 100; ++s) {
            auto src = generate_constant_stream(1e5, 1.0, {}, s);
            mean += static_cast<double>(count(*src)) / 100.0;
        }
        CHECK(std::fabs(mean - 1e5) < 1e3);
    }

    TEST_CASE("every generator yields non-decreasing timestamps")
    {
        for (std::uint64_t seed : {0ULL, 1ULL, 77ULL}) {
            auto c = generate_constant_stream(5e6, 0.05, {}, seed);
            auto r = generate_ramp_stream(1e7, 1e5, 0.05, {}, seed);
            auto u = generate_ramp_stream(1e3, 1e7, 0.05, {}, seed);
            CHECK(non_decreasing(drain(*c)));
            CHECK(non_decreasing(drain(*r)));
            CHECK(non_decreasing(drain(*u)));
        }
    }

    TEST_CASE("invalid generator parameters are configuration errors")
    {
        CHECK_THROWS_AS(generate_constant_stream(0.0, 1.0, {}, 0), config_error);
        CHECK_THROWS_AS(generate_constant_stream(1e6, -1.0, {}, 0), config_error);
        CHECK_THROWS_AS(generate_ramp_stream(1e5, 0.0, 1.0, {}, 0), config_error);
        CHECK_THROWS_AS(generate_ramp_stream(-1.0, 1e5, 1.0, {}, 0), config_error);
        try {
            generate_constant_stream(-5.0, 1.0, {}, 0);
        } catch (const config_error& e) {
            CHECK(e.key() == "source.rate");
        }
    }
}

TEST_SUITE("event_csv")
{
    TEST_CASE("line maps directly onto event fields")
    {
        const auto e = parse_event_line("1500,10,20,1", 1, {});
        CHECK(e == event{1500, 10, 20, 1});
        CHECK(parse_event_line("0,0,0,-1", 1, {}).polarity == -1);
    }

    TEST_CASE("empty file yields an exhausted source")
    {
        auto p = temp_file("empty.csv", "");
        auto src = read_event_file(p);
        CHECK_FALSE(src->next().has_value());
        auto h = temp_file("header_only.csv", "t_us,x,y,p\n");
        CHECK_FALSE(read_event_file(h)->next().has_value());
    }

    TEST_CASE("malformed lines report their line number")
    {
        auto p = temp_file("bad.csv", "t_us,x,y,p\n1,2,3,1\n2,2,x,1\n");
        auto src = read_event_file(p);
        CHECK(src->next().has_value());
        try {
            src->next();
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.line() == 3);
        }
        for (const char* bad : {"1,2,3", "1,2,3,0", "1,2,3,1,5", "-1,2,3,1", "1,346,3,1", "1,2,260,-1", "1,,3,1", " 1,2,3,1"})
            CHECK_THROWS_AS(parse_event_line(bad, 7, {}), parse_error);
    }

    TEST_CASE("decreasing timestamps are an ordering error")
    {
        auto p = temp_file("order.csv", "5,1,1,1\n5,1,1,-1\n4,1,1,1\n");
        auto src = read_event_file(p);
        CHECK(src->next());
        CHECK(src->next());
        CHECK_THROWS_AS(src->next(), ordering_error);
    }

    TEST_CASE("missing file is a configuration error")
    {
        CHECK_THROWS_AS(read_event_file("/nonexistent/asap/events.csv"), config_error);
    }

    TEST_CASE("round trip reproduces events exactly, including boundary values")
    {
        const sensor_geometry g{};
        std::vector<event> evs = {{0, 0, 0, -1}, {0, 345, 259, 1}, {7, 345, 0, -1},
                                  {std::int64_t{1} << 40, 0, 259, 1}};
        auto gen = generate_constant_stream(1e5, 0.01, g, 8);
        while (auto e = gen->next())
            evs.push_back(event{e->t + (std::int64_t{1} << 40), e->x, e->y, e->polarity});

        const auto p = std::filesystem::temp_directory_path() / "asap_test_rt.csv";
        write_event_file(p, evs);
        auto src = read_event_file(p, g);
        CHECK(drain(*src) == evs);
    }

    TEST_CASE("rewriting a file gives its canonical serialization")
    {
        // Header omitted in the input; canonical form always carries it.
        auto in = temp_file("canon_in.csv", "1500,10,20,1\n1500,11,20,-1\n1600,0,0,1\n");
        auto src = read_event_file(in);
        const auto evs = drain(*src);
        const auto out = std::filesystem::temp_directory_path() / "asap_test_canon_out.csv";
        write_event_file(out, evs);
        CHECK(slurp(out) == "t_us,x,y,p\n1500,10,20,1\n1500,11,20,-1\n1600,0,0,1\n");

        // Canonical files are fixed points.
        const auto again = std::filesystem::temp_directory_path() / "asap_test_canon_again.csv";
        auto src2 = read_event_file(out);
        write_event_file(again, drain(*src2));
        CHECK(slurp(again) == slurp(out));
    }

    TEST_CASE("file replay yields non-decreasing timestamps")
    {
        auto gen = generate_ramp_stream(1e4, 1e6, 0.05, {}, 2);
        const auto evs = drain(*gen);
        const auto p = std::filesystem::temp_directory_path() / "asap_test_replay.csv";
        write_event_file(p, evs);
        auto src = read_event_file(p);
        CHECK(non_decreasing(drain(*src)));
    }
}
