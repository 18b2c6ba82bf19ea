#include "clusteradj/error.hpp"
#include "clusteradj/population.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace clusteradj;

TEST_SUITE("population") {

TEST_CASE("hand table: effects and residuals") {
    const Population pop = testing::hand_population();
    CHECK(pop.unit_count() == 4);
    CHECK(pop.cluster_count() == 2);
    const Estimands e = compute_estimands(pop);
    CHECK(e.tau == 0.0);
    CHECK(e.tau_c[0] == 1.0);
    CHECK(e.tau_c[1] == -1.0);
    CHECK(e.ybar0 == 1.5);
    CHECK(e.ybar1 == 1.5);
    const std::vector<double> eps0{-1.5, 0.5, -0.5, 1.5};
    const std::vector<double> eps1{-0.5, 1.5, -1.5, 0.5};
    CHECK(e.eps0 == eps0);
    CHECK(e.eps1 == eps1);
    // Cluster means of the residual arrays.
    CHECK(e.eps0_bar_c[0] == -0.5);
    CHECK(e.eps1_bar_c[0] == 0.5);
    CHECK(e.eps0_bar_c[1] == 0.5);
    CHECK(e.eps1_bar_c[1] == -0.5);
    CHECK(e.eps1_bar_c[0] - e.eps0_bar_c[0] == 1.0);
}

TEST_CASE("from_table groups units by cluster and validates ids") {
    const std::vector<UnitRow> rows = {{2, 1, 0}, {1, 0, 1}, {2, 3, 2}, {1, 2, 3}};
    const Population pop = Population::from_table(rows);
    CHECK(pop.cluster_size(0) == 2);
    CHECK(pop.cluster_id(0) == 1);
    CHECK(pop.cluster_id(3) == 2);
    CHECK(pop.y0()[0] == 0.0);  // stable within cluster
    CHECK(pop.y0()[1] == 2.0);

    const std::vector<UnitRow> gap = {{1, 0, 0}, {3, 0, 0}};
    CHECK_THROWS_AS(Population::from_table(gap), ConfigError);
    const std::vector<UnitRow> zero = {{0, 0, 0}};
    CHECK_THROWS_AS(Population::from_table(zero), ConfigError);
    const std::vector<UnitRow> inf = {{1, 0, INFINITY}};
    CHECK_THROWS_AS(Population::from_table(inf), ConfigError);
}

TEST_CASE("default generator: equal clusters give tau exactly zero") {
    PopulationSpec spec;
    spec.cluster_count = 10;
    spec.units_per_cluster = {500};
    const Population pop = build_population(spec, 42);
    CHECK(pop.unit_count() == 5000);
    const Estimands e = compute_estimands(pop);
    CHECK(e.tau == 0.0);
    for (std::size_t c = 0; c < 10; ++c) CHECK(testing::close(e.tau_c[c], c < 5 ? -1.0 : 1.0, 1e-12));
    for (std::size_t i = 0; i < pop.unit_count(); ++i) {
        CHECK(testing::close(pop.y1()[i] - pop.y0()[i], pop.cluster_index()[i] < 5 ? -1.0 : 1.0, 1e-12));
    }
}

TEST_CASE("generator is deterministic in the seed") {
    PopulationSpec spec;
    spec.cluster_count = 4;
    spec.units_per_cluster = {3, 1, 4, 1};
    const Population a = build_population(spec, 7);
    const Population b = build_population(spec, 7);
    const Population c = build_population(spec, 8);
    CHECK(std::memcmp(a.y0().data(), b.y0().data(), a.unit_count() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.y1().data(), b.y1().data(), a.unit_count() * sizeof(double)) == 0);
    CHECK(a.y0()[0] != c.y0()[0]);
    CHECK(a.cluster_sizes() == std::vector<std::size_t>{3, 1, 4, 1});
}

TEST_CASE("zero noise and zero effects") {
    PopulationSpec spec;
    spec.cluster_count = 3;
    spec.units_per_cluster = {5};
    spec.tau_pattern = {0, 0, 0};
    spec.noise_sd = 0.0;
    const Population pop = build_population(spec, 1);
    const Estimands e = compute_estimands(pop);
    CHECK(e.tau == 0.0);
    for (std::size_t i = 0; i < pop.unit_count(); ++i) {
        CHECK(pop.y0()[i] == 0.0);
        CHECK(pop.y1()[i] == 0.0);
        CHECK(e.eps0[i] == 0.0);
        CHECK(e.eps1[i] == 0.0);
    }
}

TEST_CASE("no effect: y1 = y0") {
    std::vector<UnitRow> rows = {{1, 0.5, 0.5}, {1, -2, -2}, {2, 3, 3}};
    const Estimands e = compute_estimands(Population::from_table(rows));
    CHECK(e.tau == 0.0);
    CHECK(e.tau_c == std::vector<double>{0.0, 0.0});
    CHECK(e.eps0 == e.eps1);
}

TEST_CASE("invalid specs") {
    PopulationSpec odd;
    odd.cluster_count = 3;
    odd.units_per_cluster = {2};
    CHECK_THROWS_AS(build_population(odd, 0), ConfigError);
    PopulationSpec empty;
    empty.cluster_count = 2;
    empty.units_per_cluster = {2, 0};
    CHECK_THROWS_AS(build_population(empty, 0), ConfigError);
    PopulationSpec pattern;
    pattern.cluster_count = 2;
    pattern.units_per_cluster = {2};
    pattern.tau_pattern = {1.0};
    CHECK_THROWS_AS(build_population(pattern, 0), ConfigError);
    PopulationSpec sd;
    sd.cluster_count = 2;
    sd.units_per_cluster = {2};
    sd.noise_sd = -1;
    CHECK_THROWS_AS(build_population(sd, 0), ConfigError);
}

TEST_CASE("estimand invariants on unequal random populations") {
    std::mt19937_64 eng(2024);
    for (int rep = 0; rep < 20; ++rep) {
        std::uniform_int_distribution<std::size_t> size(1, 300);
        std::vector<std::size_t> sizes(1 + rep % 7);
        for (auto& m : sizes) m = size(eng);
        const Population pop = testing::random_population(eng, sizes, 2.0);
        const Estimands e = compute_estimands(pop);
        const double M = static_cast<double>(pop.unit_count());
        double max_abs = 0.0, s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < pop.unit_count(); ++i) {
            max_abs = std::max({max_abs, std::fabs(e.eps0[i]), std::fabs(e.eps1[i])});
            s0 += e.eps0[i];
            s1 += e.eps1[i];
        }
        CHECK(std::fabs(s0) < 1e-8 * M * max_abs);
        CHECK(std::fabs(s1) < 1e-8 * M * max_abs);
        double agg = 0.0, w0 = 0.0, w1 = 0.0;
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            const double mc = static_cast<double>(sizes[c]);
            agg += mc / M * e.tau_c[c];
            w0 += mc * e.eps0_bar_c[c];
            w1 += mc * e.eps1_bar_c[c];
        }
        CHECK(testing::close(e.tau, agg, 1e-10, 1e-12));
        CHECK(std::fabs(w0) < 1e-8 * M * max_abs);
        CHECK(std::fabs(w1) < 1e-8 * M * max_abs);
    }
}

TEST_CASE("population CSV loading") {
    const auto dir = std::filesystem::temp_directory_path() / "clusteradj_population_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "ok.csv");
        f << "\xEF\xBB\xBF" "cluster,y0,y1\n1,0,1\n1,2,3\n\n2,1,0\n2,3,2\n";
    }
    const Population pop = load_population_csv(dir / "ok.csv");
    CHECK(pop.unit_count() == 4);
    CHECK(compute_estimands(pop).tau_c[1] == -1.0);

    {
        std::ofstream f(dir / "bad.csv");
        f << "cluster,y0,y1\n1,0,1\n1,abc,3\n";
    }
    try {
        load_population_csv(dir / "bad.csv");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    {
        std::ofstream f(dir / "nohdr.csv");
        f << "id,y0,y1\n1,0,1\n";
    }
    CHECK_THROWS_AS(load_population_csv(dir / "nohdr.csv"), DataError);
    CHECK_THROWS_AS(load_population_csv(dir / "missing.csv"), DataError);
}

}  // TEST_SUITE
