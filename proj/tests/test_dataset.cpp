#include "clusteradj/dataset.hpp"
#include "clusteradj/error.hpp"
#include "clusteradj/report.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

using namespace clusteradj;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_dataset_csv(text, "d.csv");
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

bool mentions(const std::vector<std::string>& lines, const std::string& needle) {
    for (const auto& l : lines)
        if (l.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("parses, reorders columns and groups by first appearance") {
    const AnalysisInput in = parse_dataset_csv("\xEF\xBB\xBF" "cluster,w,y\nb,1,1.5\na,0,2\n\nb,0,3\na,1,-1\n");
    CHECK(in.rows == 4);
    CHECK(in.blank_lines == 1);
    CHECK(in.labels == std::vector<std::string>{"b", "a"});
    CHECK(in.sample.y == std::vector<double>{1.5, 3, 2, -1});
    CHECK(in.sample.w == std::vector<double>{1, 0, 0, 1});
    CHECK(in.sample.offsets == std::vector<std::size_t>{0, 2, 4});
    CHECK(in.sample.cluster_ids == std::vector<std::int64_t>{1, 2});
}

TEST_CASE("input errors") {
    CHECK(error_of("y,treat,cluster\n1,1,a\n").find("missing required column") != std::string::npos);
    CHECK(error_of("y,w,cluster\n1,2,a\n2,0,a\n").find("line 2") != std::string::npos);
    CHECK(error_of("y,w,cluster\n1,1,a\nx,0,a\n").find("line 3") != std::string::npos);
    CHECK(error_of("y,w,cluster\n1,1,\n").find("empty cluster") != std::string::npos);
    CHECK(error_of("y,w,cluster\n1,1\n").find("line 2") != std::string::npos);
    CHECK(error_of("y,w,cluster\n").find("no data") != std::string::npos);
    CHECK(error_of("y,w,cluster\n1,1,a\n2,1,b\n").find("one treatment arm") != std::string::npos);
    CHECK(error_of("").find("header") != std::string::npos);
    CHECK_THROWS_AS(load_dataset_csv("/nonexistent/x.csv"), DataError);
}

TEST_CASE("write and read back") {
    std::mt19937_64 eng(8);
    const Sample s = testing::random_sample(eng, 7, 12);
    const auto path = std::filesystem::temp_directory_path() / "clusteradj_dataset_roundtrip.csv";
    write_dataset_csv(path, s);
    const AnalysisInput in = load_dataset_csv(path);
    REQUIRE(in.sample.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(testing::close(in.sample.y[i], s.y[i], 1e-12, 1e-15));
        CHECK(in.sample.w[i] == s.w[i]);
    }
    CHECK(in.sample.offsets == s.offsets);
}

TEST_CASE("analyze: hand example and guidance") {
    const AnalysisInput in = parse_dataset_csv("y,w,cluster\n1,1,1\n3,1,1\n2,0,2\n4,0,2\n");
    AnalysisOptions opt;
    opt.fixed_effects = true;
    const EstimateReport r = analyze(in, opt);
    REQUIRE(r.models.size() == 2);
    REQUIRE(r.models[0].fit.has_value());
    CHECK(r.models[0].fit->tau_hat == -1.0);
    CHECK(r.models[0].variances->v_ehw == 1.0);
    CHECK(r.models[0].variances->v_lz == 0.0);
    // No cluster has both arms: fixed effects are not estimable.
    CHECK_FALSE(r.models[1].fit.has_value());
    CHECK_FALSE(r.models[1].error.empty());
    CHECK(mentions(r.guidance, "Declare"));

    opt.sampling_clustered = false;
    opt.assignment_clustered = false;
    CHECK(mentions(analyze(in, opt).guidance, "do not adjust"));
    opt.sampling_clustered = true;
    opt.all_clusters_sampled = true;
    CHECK(mentions(analyze(in, opt).guidance, "unavailable"));

    const auto j = to_json(r, opt);
    CHECK(j["models"][0]["tau_hat"] == -1.0);
    opt.estimators = {"iv"};
    CHECK_THROWS_AS(analyze(in, opt), ConfigError);
}

}  // TEST_SUITE
