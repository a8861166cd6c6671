#include <doctest.h>

#include <cmath>

#include "rilab/experiments.hpp"

using namespace rilab;

TEST_SUITE("experiments") {

TEST_CASE("config grammar") {
    auto c = ExperimentConfig::parse("# comment\nkind = emptiness_identity\nu = 0.1, 0.2  # trailing\n\nreplicas=50\n");
    CHECK(c.kind == ExperimentKind::emptiness_identity);
    CHECK(c.u == std::vector<double>{0.1, 0.2});
    CHECK(c.replicas == 50);
    CHECK_THROWS_AS(ExperimentConfig::parse("u = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("kind = emptiness_identity\nwindow = 3\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("kind = emptiness_identity\nu = 1\nu = 2\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("kind = nothing\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("kind = emptiness_identity\nreplicas = -3\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("kind = emptiness_identity\njust words\n"), ConfigError);
    for (auto k : all_experiment_kinds()) CHECK(parse_experiment_kind(to_string(k)) == k);
}

TEST_CASE("validation") {
    auto bad = [](const std::string& text) {
        auto c = ExperimentConfig::parse(text).with_defaults();
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad("kind = emptiness_identity\nreplicas = 0\n");
    bad("kind = emptiness_identity\nu = 0.2, 0.1\n");
    bad("kind = fpp_scaling\nd = 4\n");
    bad("kind = fpp_scaling\nu = 0.1\nN = 10\n");
    bad("kind = local_uniqueness\nxi = 1\n");
    bad("kind = local_uniqueness\nN = 400\n");
    bad("kind = walk_capacity_tail\np = 3\n");
    bad("kind = green_asymptotics\nN = 200\n");
    bad("kind = coarse_fpp_event\nweights = occupied_indicator\n");
    for (auto k : all_experiment_kinds()) {
        auto c = ExperimentConfig::parse("kind = " + to_string(k) + "\n").with_defaults();
        CHECK_NOTHROW(c.validate());
    }
}

TEST_CASE("hash ignores seed, threads and output directory") {
    auto a = ExperimentConfig::parse("kind = fpp_scaling\nseed = 1\nthreads = 1\n");
    auto b = ExperimentConfig::parse("kind = fpp_scaling\nseed = 9\nthreads = 8\nout = elsewhere\n");
    auto c = ExperimentConfig::parse("kind = fpp_scaling\nreplicas = 7\n");
    CHECK(a.with_defaults().hash() == b.with_defaults().hash());
    CHECK(a.with_defaults().hash() != c.with_defaults().hash());
    // explicit defaults hash like implicit ones
    auto e = ExperimentConfig::parse("kind = fpp_scaling\nreplicas = 2000\n");
    CHECK(a.with_defaults().hash() == e.with_defaults().hash());
}

TEST_CASE("zero replicas exits with 2 through run") {
    auto c = ExperimentConfig::parse("kind = tube_capacity\nreplicas = 0\n");
    CHECK_THROWS_AS(run(c), ConfigError);
}

TEST_CASE("tiny runs are reproducible across thread counts") {
    const std::string text =
        "kind = emptiness_identity\nreplicas = 300\nu = 0.1, 0.3\nK_radius = 1\nwindow_radius = 2\n"
        "bias_target = 0.01\n";
    auto c1 = ExperimentConfig::parse(text + "threads = 1\n");
    auto c4 = ExperimentConfig::parse(text + "threads = 4\n");
    auto r1 = run(c1), r4 = run(c4);
    CHECK(records_csv(r1.records) == records_csv(r4.records));
    auto c2 = ExperimentConfig::parse(text + "seed = 2\n");
    CHECK(records_csv(run(c2).records) != records_csv(r1.records));
}

TEST_CASE("bias above the standard error sets exit code 3") {
    auto c = ExperimentConfig::parse(
        "kind = emptiness_identity\nreplicas = 200\nu = 0.2\nK_radius = 1\nwindow_radius = 2\nbias_target = 0.5\n");
    auto r = run(c);
    CHECK(r.exit_code == 3);
    bool flagged = false;
    for (const auto& rec : r.records) flagged = flagged || rec.flag.find("bias_exceeds_se") != std::string::npos;
    CHECK(flagged);
}

TEST_CASE("records csv layout") {
    EstimateRecord r;
    r.kind = "tube_capacity";
    r.params = "N=10;p=2";
    r.quantity = "cap_tube";
    r.estimate = 1.5;
    r.reference = std::nan("");
    r.n_replicas = 1;
    r.seed = 4;
    r.config_hash = "abc";
    auto body = records_csv({r});
    CHECK(records_csv_header().rfind("schema,kind,params,quantity,estimate,se,reference", 0) == 0);
    CHECK(body.find("tube_capacity,N=10;p=2,cap_tube,1.5,") != std::string::npos);
    CHECK(body.back() == '\n');
    auto found = find_record({r}, "cap_tube", "N=10;p=2");
    REQUIRE(found);
    CHECK(found->estimate == 1.5);
    CHECK(find_record({r}, "cap_tube", "N=11;p=2") == nullptr);
}

TEST_CASE("green run stays in the asymptotic band") {
    auto c = ExperimentConfig::parse("kind = green_asymptotics\nrho = 24\nN = 4, 6, 8\n");
    auto r = run(c);
    CHECK(r.exit_code == 0);
    auto recs = find_records(r.records, "x_green");
    REQUIRE(recs.size() >= 3);
    for (auto* rec : recs) {
        CHECK(rec->estimate > 0.4);
        CHECK(rec->estimate < 0.55);
    }
}

}
