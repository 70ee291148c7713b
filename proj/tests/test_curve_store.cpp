#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mapd/curve_store.hpp"
#include "mapd/rng.hpp"

using mapd::CurvePoint;
using mapd::CurveStore;
using mapd::Error;
using mapd::ExampleId;

namespace {

CurvePoint pt(std::uint32_t epoch, float loss) {
    CurvePoint p;
    p.epoch = epoch;
    p.loss = loss;
    return p;
}

CurvePoint pt(std::uint32_t epoch, float loss, bool correct, float confidence) {
    CurvePoint p = pt(epoch, loss);
    p.correct = correct;
    p.label_confidence = confidence;
    return p;
}

/// Store with one curve per correctness pattern; loss = 2 - 0.1*epoch.
CurveStore store_from_patterns(const std::vector<std::vector<bool>>& patterns) {
    CurveStore store;
    for (std::size_t id = 0; id < patterns.size(); ++id)
        for (std::size_t e = 0; e < patterns[id].size(); ++e)
            store.append_point(id, pt(static_cast<std::uint32_t>(e),
                                      2.0f - 0.1f * static_cast<float>(e), patterns[id][e],
                                      0.5f));
    return store;
}

} // namespace

TEST_CASE("append_point base cases") {
    CurveStore store;
    store.append_point(0, pt(0, 2.3f));
    REQUIRE(store.curve(0).size() == 1);
    REQUIRE(store.epoch_count() == 1);

    store.append_point(0, pt(1, 1.5f));
    store.append_point(0, pt(2, 1.0f));
    store.append_point(0, pt(3, 0.8f));
    REQUIRE(store.curve(0).size() == 4);

    SECTION("gap is rejected") {
        REQUIRE_THROWS_AS(store.append_point(0, pt(5, 0.7f)), Error);
    }
    SECTION("duplicate epoch is rejected") {
        REQUIRE_THROWS_AS(store.append_point(0, pt(3, 0.7f)), Error);
    }
    SECTION("non-finite loss is rejected") {
        REQUIRE_THROWS_AS(store.append_point(1, pt(0, std::numeric_limits<float>::quiet_NaN())),
                          Error);
        REQUIRE_THROWS_AS(store.append_point(1, pt(0, std::numeric_limits<float>::infinity())),
                          Error);
        REQUIRE_THROWS_AS(store.append_point(1, pt(0, -1.0f)), Error);
    }
    SECTION("mixed optional fields are rejected") {
        REQUIRE_THROWS_AS(store.append_point(1, pt(0, 1.0f, true, 0.5f)), Error);
    }
    SECTION("a rejected append leaves the store untouched") {
        CurveStore fresh;
        REQUIRE_THROWS_AS(fresh.append_point(0, pt(3, 1.0f, true, 0.5f)), Error);
        REQUIRE(fresh.empty());
        // the failed flagged append must not have fixed the field mask
        fresh.append_point(0, pt(0, 1.0f));
        REQUIRE_FALSE(fresh.has_correct());
    }
    SECTION("trained flag may not flip mid-curve") {
        REQUIRE_THROWS_AS(store.append_point(0, pt(4, 0.7f), /*trained=*/false), Error);
    }
}

TEST_CASE("loss_prefix") {
    CurveStore store;
    store.append_point(7, pt(0, 2.3f));
    store.append_point(7, pt(1, 1.1f));
    store.append_point(7, pt(2, 0.4f));

    REQUIRE(store.loss_prefix(7, 2) == std::vector<float>{2.3f, 1.1f});
    REQUIRE(store.loss_prefix(7, 3) == std::vector<float>{2.3f, 1.1f, 0.4f});
    REQUIRE_THROWS_AS(store.loss_prefix(7, 0), Error);
    REQUIRE_THROWS_AS(store.loss_prefix(7, 4), Error);
    REQUIRE_THROWS_AS(store.loss_prefix(8, 1), Error);
}

TEST_CASE("percent_first_learned definition") {
    auto store = store_from_patterns({{false, true, false}});
    const std::vector<ExampleId> ids{0};
    REQUIRE(store.percent_first_learned(ids, 3) == 1.0);
    REQUIRE(store.percent_first_learned(ids, 1) == 0.0);

    auto none = store_from_patterns({{false, false, false}});
    REQUIRE(none.percent_first_learned(ids, 3) == 0.0);

    auto mixed = store_from_patterns({{true, true}, {false, false}});
    const std::vector<ExampleId> both{0, 1};
    REQUIRE(mixed.percent_first_learned(both, 2) == 0.5);
}

TEST_CASE("percent_first_learned requires flags") {
    CurveStore store;
    store.append_point(0, pt(0, 1.0f));
    const std::vector<ExampleId> ids{0};
    REQUIRE_THROWS_AS(store.percent_first_learned(ids, 1), Error);
}

TEST_CASE("percent_consistently_learned definition") {
    const std::vector<ExampleId> ids{0};

    auto store = store_from_patterns({{true, false, true}});
    REQUIRE(store.percent_consistently_learned(ids, 3) == 1.0);
    REQUIRE(store.percent_consistently_learned(ids, 2) == 0.0);

    auto all_true = store_from_patterns({{true, true, true, true}});
    for (std::size_t t = 1; t <= 4; ++t)
        REQUIRE(all_true.percent_consistently_learned(ids, t) == 1.0);

    auto forgotten = store_from_patterns({{false, true, true, false}});
    for (std::size_t t = 1; t <= 4; ++t)
        REQUIRE(forgotten.percent_consistently_learned(ids, t) == 0.0);

    REQUIRE_THROWS_AS(store.percent_consistently_learned(ids, 4), Error);
}

TEST_CASE("statistics monotonicity property") {
    // Random correctness patterns: first-learned is non-decreasing in t and
    // dominates consistently-learned everywhere.
    mapd::Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t T = 1 + rng.uniform_int(12);
        const std::size_t n = 1 + rng.uniform_int(8);
        std::vector<std::vector<bool>> patterns(n);
        for (auto& p : patterns)
            for (std::size_t e = 0; e < T; ++e) p.push_back(rng.uniform() < 0.6);
        auto store = store_from_patterns(patterns);
        std::vector<ExampleId> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = i;
        double prev = 0.0;
        for (std::size_t t = 1; t <= T; ++t) {
            const double first = store.percent_first_learned(ids, t);
            const double consistent = store.percent_consistently_learned(ids, t);
            REQUIRE(first >= prev);
            REQUIRE(consistent <= first);
            prev = first;
        }
    }
}

TEST_CASE("mean_curve") {
    CurveStore store;
    store.append_point(0, pt(0, 0.0f));
    store.append_point(0, pt(1, 0.0f));
    store.append_point(1, pt(0, 2.0f));
    store.append_point(1, pt(1, 4.0f));

    SECTION("averaging") {
        const std::vector<ExampleId> ids{0, 1};
        REQUIRE(store.mean_curve(ids, 2) == std::vector<double>{1.0, 2.0});
    }
    SECTION("single id is the identity") {
        const std::vector<ExampleId> ids{1};
        REQUIRE(store.mean_curve(ids, 2) == std::vector<double>{2.0, 4.0});
    }
    SECTION("empty set errors") {
        const std::vector<ExampleId> ids{};
        REQUIRE_THROWS_AS(store.mean_curve(ids, 2), Error);
    }
    SECTION("permutation invariance") {
        std::vector<ExampleId> a{0, 1}, b{1, 0};
        REQUIRE(store.mean_curve(a, 2) == store.mean_curve(b, 2));
    }
}

TEST_CASE("csv round trip") {
    CurveStore store;
    mapd::Rng rng(7);
    for (ExampleId id = 0; id < 3; ++id)
        for (std::uint32_t e = 0; e < 5; ++e)
            store.append_point(id, pt(e, static_cast<float>(rng.uniform() * 3.0),
                                      rng.uniform() < 0.5,
                                      static_cast<float>(rng.uniform())));

    const std::string csv = mapd::to_csv(store);
    const CurveStore back = mapd::from_csv(csv);
    REQUIRE(mapd::to_csv(back) == csv);
    REQUIRE(back.size() == store.size());
    REQUIRE(back.epoch_count() == store.epoch_count());
    for (ExampleId id = 0; id < 3; ++id) {
        REQUIRE(back.loss_prefix(id, 5) == store.loss_prefix(id, 5));
        for (std::uint32_t e = 0; e < 5; ++e) {
            REQUIRE(back.curve(id).points[e].correct == store.curve(id).points[e].correct);
            REQUIRE(back.curve(id).points[e].label_confidence ==
                    store.curve(id).points[e].label_confidence);
        }
    }
}

TEST_CASE("csv preserves the trained flag") {
    CurveStore store;
    store.append_point(0, pt(0, 1.0f), /*trained=*/true);
    store.append_point(1, pt(0, 2.0f), /*trained=*/false);
    const std::string csv = mapd::to_csv(store);
    REQUIRE(csv.find(",trained") != std::string::npos);
    const CurveStore back = mapd::from_csv(csv);
    REQUIRE(back.curve(0).trained);
    REQUIRE_FALSE(back.curve(1).trained);

    // All-trained stores keep the minimal header.
    CurveStore plain;
    plain.append_point(0, pt(0, 1.0f));
    REQUIRE(mapd::to_csv(plain).find("trained") == std::string::npos);
}

TEST_CASE("csv parse errors") {
    SECTION("epoch gap") {
        REQUIRE_THROWS_AS(mapd::from_csv("example_id,epoch,loss\n0,0,1.5\n0,2,1.0\n"), Error);
    }
    SECTION("duplicate (id, epoch)") {
        REQUIRE_THROWS_AS(mapd::from_csv("example_id,epoch,loss\n0,0,1.5\n0,0,1.0\n"), Error);
    }
    SECTION("unsorted ids") {
        REQUIRE_THROWS_AS(mapd::from_csv("example_id,epoch,loss\n1,0,1.5\n0,0,1.0\n"), Error);
    }
    SECTION("bad header") {
        REQUIRE_THROWS_AS(mapd::from_csv("id,epoch,loss\n"), Error);
    }
    SECTION("malformed loss") {
        REQUIRE_THROWS_AS(mapd::from_csv("example_id,epoch,loss\n0,0,abc\n"), Error);
    }
    SECTION("empty file with header parses to an empty store") {
        const CurveStore store = mapd::from_csv("example_id,epoch,loss\n");
        REQUIRE(store.empty());
        REQUIRE(store.epoch_count() == 0);
    }
}

TEST_CASE("binary round trip matches csv round trip") {
    mapd::Rng rng(11);
    CurveStore store;
    for (ExampleId id = 0; id < 10; ++id) {
        const bool trained = id % 3 != 0;
        for (std::uint32_t e = 0; e < 8; ++e)
            store.append_point(id, pt(e, static_cast<float>(rng.uniform() * 5.0),
                                      rng.uniform() < 0.5,
                                      static_cast<float>(rng.uniform())),
                               trained);
    }
    const std::string bin = mapd::to_binary(store);
    const CurveStore back = mapd::from_binary(bin);
    REQUIRE(mapd::to_binary(back) == bin);
    // Both containers round-trip to identical float32 payloads.
    REQUIRE(mapd::to_csv(back) == mapd::to_csv(store));
}

TEST_CASE("binary rejects corruption") {
    CurveStore store;
    store.append_point(0, pt(0, 1.0f));
    std::string bin = mapd::to_binary(store);
    SECTION("bad magic") {
        bin[0] = 'X';
        REQUIRE_THROWS_AS(mapd::from_binary(bin), Error);
    }
    SECTION("truncated") {
        REQUIRE_THROWS_AS(mapd::from_binary(std::string_view(bin).substr(0, bin.size() - 2)),
                          Error);
    }
    SECTION("trailing bytes") {
        bin += 'x';
        REQUIRE_THROWS_AS(mapd::from_binary(bin), Error);
    }
}

TEST_CASE("file round trip dispatches on extension") {
    CurveStore store;
    store.append_point(3, pt(0, 1.25f));
    store.append_point(3, pt(1, 0.5f));
    const std::string dir =
        (std::filesystem::temp_directory_path() / "mapd_store_ext").string();
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    for (const char* name : {"curves.csv", "curves.mapd", "curves.bin"}) {
        const std::string path = dir + "/" + name;
        mapd::save_curves(store, path);
        const CurveStore back = mapd::load_curves(path);
        REQUIRE(mapd::to_csv(back) == mapd::to_csv(store));
    }
    // the binary paths really are binary containers
    REQUIRE(mapd::read_file(dir + "/curves.mapd").substr(0, 4) == "MAPD");
    REQUIRE(mapd::read_file(dir + "/curves.csv").substr(0, 10) == "example_id");
    std::filesystem::remove_all(dir);
}

TEST_CASE("accuracy_at") {
    auto store = store_from_patterns({{true, false}, {true, true}});
    const std::vector<ExampleId> ids{0, 1};
    REQUIRE(store.accuracy_at(ids, 0) == 1.0);
    REQUIRE(store.accuracy_at(ids, 1) == 0.5);
}
