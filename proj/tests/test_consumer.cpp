#include "asap/consumer.hpp"
#include "asap/stream_source.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace asap;

namespace {

event_package package_of(std::size_t n, std::uint64_t seq = 0)
{
    event_package p;
    p.seq = seq;
    for (std::size_t i = 0; i < n; ++i)
        p.events.push_back(event{static_cast<time_us>(3 * i), static_cast<std::uint16_t>(i % 346), 7, 1});
    return p;
}

} // namespace

TEST_SUITE("synthetic_consumer")
{
    TEST_CASE("processing time is o + c*N")
    {
        synthetic_consumer c({1e-3, 1e-6, 0.0}, timing_mode::virtual_time, 0);
        const auto pkg = package_of(1000, 4);
        const auto fb = c.process(pkg);
        CHECK(fb.processing_time == 2000);
        CHECK(fb.size == 1000);
        CHECK(fb.span == pkg.span());
        CHECK(fb.package_seq == 4);
    }

    TEST_CASE("virtual time cost is a pure function of size, model and seed")
    {
        const synthetic_cost_model m{5e-4, 3e-7, 0.2};
        synthetic_consumer a(m, timing_mode::virtual_time, 9);
        synthetic_consumer b(m, timing_mode::virtual_time, 9);
        bool same = true;
        bool in_band = true;
        for (std::size_t n = 1; n < 5000; n += 37) {
            const auto ta = a.cost(n);
            same = same && ta == b.cost(n);
            const double base = (5e-4 + 3e-7 * static_cast<double>(n)) * 1e6;
            in_band = in_band && ta >= std::floor(base * 0.8) && ta <= std::ceil(base * 1.2);
        }
        CHECK(same);
        CHECK(in_band);
    }

    TEST_CASE("realtime mode spins for about the modelled duration")
    {
        synthetic_consumer c({2e-3, 0.0, 0.0}, timing_mode::realtime, 0);
        const auto fb = c.process(package_of(10));
        CHECK(fb.processing_time >= 2000);
        CHECK(fb.processing_time < 50'000);
    }

    TEST_CASE("invalid cost parameters are rejected by key")
    {
        try {
            synthetic_consumer c({1e-3, -5e-9, 0.0}, timing_mode::virtual_time, 0);
            FAIL("expected config_error");
        } catch (const config_error& e) {
            CHECK(e.key() == "consumer.c_ns");
        }
        CHECK_THROWS_AS(synthetic_consumer({-1.0, 0.0, 0.0}, timing_mode::virtual_time, 0), config_error);
        CHECK_THROWS_AS(synthetic_consumer({0.0, 0.0, -0.1}, timing_mode::virtual_time, 0), config_error);
    }
}

TEST_SUITE("clustering")
{
    TEST_CASE("first event seeds a cluster")
    {
        cluster_state s;
        assign_event(s, event{0, 10, 20, 1});
        REQUIRE(s.clusters.size() == 1);
        CHECK(s.clusters[0].cx == 10.0);
        CHECK(s.clusters[0].cy == 20.0);
        CHECK(s.clusters[0].count == 1);
    }

    TEST_CASE("nearby event updates the running mean")
    {
        cluster_state s;
        s.radius = 5.0;
        assign_event(s, event{0, 10, 20, 1});
        assign_event(s, event{1, 12, 20, 1});
        REQUIRE(s.clusters.size() == 1);
        CHECK(s.clusters[0].cx == doctest::Approx(11.0));
        CHECK(s.clusters[0].cy == doctest::Approx(20.0));
        CHECK(s.clusters[0].count == 2);
        CHECK(s.clusters[0].last_t == 1);
    }

    TEST_CASE("stale clusters expire after the ttl")
    {
        cluster_state s;
        s.ttl = 100;
        assign_event(s, event{0, 10, 20, 1});
        assign_event(s, event{100, 100, 100, 1});
        CHECK(s.clusters.size() == 2);
        assign_event(s, event{201, 10, 20, 1});
        // Both earlier clusters are older than the ttl.
        REQUIRE(s.clusters.size() == 1);
        CHECK(s.clusters[0].last_t == 201);
    }

    TEST_CASE("equidistant centroids resolve to the oldest cluster")
    {
        cluster_state s;
        s.radius = 5.0;
        assign_event(s, event{0, 10, 10, 1});
        assign_event(s, event{1, 16, 10, 1});
        REQUIRE(s.clusters.size() == 2);
        const auto idx = assign_event(s, event{2, 13, 10, 1});
        CHECK(idx == 0);
        CHECK(s.clusters[0].count == 2);
    }

    TEST_CASE("two well separated bursts form exactly two clusters")
    {
        std::mt19937_64 gen(4);
        std::uniform_int_distribution<int> jitter(-3, 3);
        cluster_state s;
        s.radius = 10.0;
        std::vector<event> burst_a;
        std::vector<event> burst_b;
        for (int i = 0; i < 500; ++i) {
            burst_a.push_back(event{2 * i, static_cast<std::uint16_t>(50 + jitter(gen)),
                                    static_cast<std::uint16_t>(50 + jitter(gen)), 1});
            burst_b.push_back(event{2 * i + 1, static_cast<std::uint16_t>(200 + jitter(gen)),
                                    static_cast<std::uint16_t>(150 + jitter(gen)), -1});
        }
        // Oracle: brute force, no event of one burst is within the radius of
        // any point the other burst's centroid could occupy (its bounding box).
        auto far_apart = [&](const std::vector<event>& a, const std::vector<event>& b) {
            for (const auto& e : a)
                for (const auto& f : b) {
                    const double dx = static_cast<double>(e.x) - f.x;
                    const double dy = static_cast<double>(e.y) - f.y;
                    if (std::sqrt(dx * dx + dy * dy) <= 2.0 * s.radius)
                        return false;
                }
            return true;
        };
        REQUIRE(far_apart(burst_a, burst_b));
        for (int i = 0; i < 500; ++i) {
            assign_event(s, burst_a[i]);
            assign_event(s, burst_b[i]);
        }
        CHECK(s.clusters.size() == 2);
    }

    TEST_CASE("absorption always happens within the radius")
    {
        auto src = generate_constant_stream(2e5, 0.2, {}, 6);
        cluster_state s;
        s.radius = 8.0;
        s.ttl = 5000;
        std::size_t processed = 0;
        std::size_t max_clusters = 0;
        bool within = true;
        bool in_bounds = true;
        while (auto e = src->next()) {
            const auto before = s.clusters;
            const auto idx = assign_event(s, *e);
            ++processed;
            const auto& c = s.clusters[idx];
            if (c.count > 1) {
                // Find its centroid just before absorption.
                for (const auto& b : before)
                    if (b.id == c.id) {
                        const double dx = b.cx - e->x;
                        const double dy = b.cy - e->y;
                        within = within && dx * dx + dy * dy <= s.radius * s.radius;
                    }
            }
            for (const auto& k : s.clusters)
                in_bounds = in_bounds && k.cx >= 0 && k.cx < 346 && k.cy >= 0 && k.cy < 260 && k.count >= 1 &&
                            e->t - k.last_t <= s.ttl;
            max_clusters = std::max(max_clusters, s.clusters.size());
            if (processed == 5000)
                break;
        }
        CHECK(within);
        CHECK(in_bounds);
        CHECK(max_clusters <= processed);
    }

    TEST_CASE("clustering consumer echoes package size and span")
    {
        clustering_consumer c(10.0, 50'000);
        std::uint64_t total = 0;
        for (std::uint64_t seq = 0; seq < 10; ++seq) {
            const auto pkg = package_of(100 + seq * 10, seq);
            const auto fb = c.process(pkg);
            CHECK(fb.size == pkg.size());
            CHECK(fb.span == pkg.span());
            CHECK(fb.package_seq == seq);
            CHECK(fb.processing_time >= 0);
            total += pkg.size();
        }
        CHECK(c.processed() == total);
    }
}
