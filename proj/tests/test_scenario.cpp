#include "nfris/scenario.hpp"

#include <gtest/gtest.h>

using namespace nfris;

namespace {

const std::string dir = NFRIS_SCENARIO_DIR;

const std::string minimal = R"(name = tiny
carrier.frequency = 6e9
carrier.subcarriers = 2
bs.center = [1, 0, 2]
bs.counts = [4, 2]
bs.plane = xz
region.x = [0, 2]
region.y = [1, 3]
region.z = [1.4, 1.8]
ris.count = 1
ris.0.center = [1, 2, 3]
ris.0.counts = [4, 4]
ris.0.plane = xy
ris.0.normal_sign = -1
ris.0.region.x = [0, 2]
ris.0.region.y = [1, 3]
ris.0.region.z = [1.4, 1.8]
ris.0.grid = [2, 2, 1]
pilots.random = 2
)";

int error_line(const std::string& text) {
    try {
        parse_scenario_text(text);
    } catch (const parse_error& e) {
        return e.line();
    }
    return -1;
}

TEST(Scenario, FullSizeDeployment) {
    const Scenario s = load_scenario(dir + "/table2.scenario");
    EXPECT_EQ(s.carrier_hz, 6e9);
    EXPECT_DOUBLE_EQ(s.wavelength(), 0.05);
    EXPECT_EQ(s.cells(), 100u);
    EXPECT_EQ(s.pilot_book().size(), 5);
    EXPECT_EQ(s.random_pool, 3);
    EXPECT_EQ(s.assigned_pool, 2);
    ASSERT_EQ(s.ris.size(), 3u);
    for (const auto& r : s.ris) EXPECT_EQ(r.array.counts, (std::array<int, 2>{24, 24}));
    EXPECT_EQ(s.bs.counts, (std::array<int, 2>{34, 6}));
    EXPECT_EQ(s.access.config.M, 25);
    EXPECT_EQ(s.access.config.B(), 50);
    EXPECT_EQ(s.access.config.J, 3);
}

TEST(Scenario, TableOneLayout) {
    const Scenario s = load_scenario(dir + "/table1_geometry.scenario");
    const double xs[] = {1.5, 4.5, 7.5};
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ((s.ris[k].array.center - Vec3(xs[k], 4.5, 3)).norm(), 0.0);
        EXPECT_EQ(s.ris[k].array.counts, (std::array<int, 2>{15, 15}));
    }
    EXPECT_EQ((s.bs.center - Vec3(4.5, 0, 2)).norm(), 0.0);
    const auto parts = s.partitions();
    EXPECT_NEAR(parts[0].cells[0].diagonal().norm(), std::sqrt(0.3 * 0.3 * 2 + 0.4 * 0.4), 1e-12);
}

TEST(Scenario, ShippedFilesParse) {
    for (const char* name : {"desk", "fig4", "fig5", "table1_geometry", "table2"})
        EXPECT_NO_THROW(load_scenario(dir + "/" + name + ".scenario")) << name;
}

TEST(Scenario, MinimalDefaults) {
    const Scenario s = parse_scenario_text(minimal);
    EXPECT_EQ(s.name, "tiny");
    EXPECT_EQ(s.timeslots, 1);
    EXPECT_EQ(s.ue.count, 1);
    EXPECT_EQ(s.bs.normal_sign, 1);
    EXPECT_EQ(s.target_pfa, 1e-2);
    EXPECT_EQ(s.access.config.B_R, 2);
    EXPECT_NEAR(s.noise_var(), noise_power(-174, 10, 15e3), 1e-30);
}

TEST(Scenario, ListsAndComments) {
    const Scenario s = parse_scenario_text(minimal + R"(
ue.count = 2            # two fixed UEs
ue.positions = [[0.5, 1.5, 1.6], [1.5, 2.5, 1.6]]
ue.pilots = [1, 0]
ue.k_rice = inf
)");
    ASSERT_EQ(s.ue.positions.size(), 2u);
    EXPECT_EQ(s.ue.positions[1].y(), 2.5);
    EXPECT_EQ(s.ue.pilots, (std::vector<int>{1, 0}));
    EXPECT_TRUE(std::isinf(s.ue.k_rice));

    std::string quoted = minimal;
    quoted.replace(0, 11, "name = \"tiny # not a comment\"");
    EXPECT_EQ(parse_scenario_text(quoted).name, "tiny # not a comment");
}

TEST(Scenario, EmptyFileRejected) {
    EXPECT_THROW(parse_scenario_text(""), parse_error);
    EXPECT_THROW(parse_scenario_text("# only a comment\n\n"), parse_error);
}

TEST(Scenario, UnknownKeyReportsLine) {
    const std::string text = minimal + "bogus.key = 3\n";
    EXPECT_EQ(error_line(text), 20);
    try {
        parse_scenario_text(text);
    } catch (const parse_error& e) {
        EXPECT_EQ(e.field(), "bogus.key");
    }
}

TEST(Scenario, DuplicateKeyReportsLine) {
    EXPECT_EQ(error_line(minimal + "carrier.frequency = 5e9\n"), 20);
}

TEST(Scenario, MalformedValues) {
    EXPECT_EQ(error_line("carrier.frequency = [1, 2\n"), 1);
    EXPECT_EQ(error_line("no equals sign here\n"), 1);
    std::string bad_plane = minimal;
    bad_plane.replace(bad_plane.find("plane = xz"), 10, "plane = zz");
    EXPECT_EQ(error_line(bad_plane), 6);
    std::string bad_grid = minimal;
    bad_grid.replace(bad_grid.find("[2, 2, 1]"), 9, "[2, 0, 1]");
    EXPECT_EQ(error_line(bad_grid), 18);
}

TEST(Scenario, MissingRequiredKey) {
    std::string text = minimal;
    text.erase(text.find("pilots.random = 2\n"));
    EXPECT_THROW(parse_scenario_text(text), parse_error);
}

TEST(Scenario, ConsistencyChecks) {
    EXPECT_THROW(parse_scenario_text(minimal + "pilots.assigned = 1\n"), parse_error);
    EXPECT_THROW(parse_scenario_text(minimal + "ue.count = 1\nue.pilots = [5]\n"), parse_error);
    EXPECT_THROW(parse_scenario_text(minimal + "ue.count = 1\nue.positions = [[9, 9, 9]]\n"), parse_error);
    EXPECT_THROW(parse_scenario_text(minimal + "detection.pfa = 1.5\n"), parse_error);
    EXPECT_THROW(parse_scenario_text(minimal + "access.kernel = magic\n"), parse_error);
}

TEST(Scenario, HashTracksLayoutAndDesign) {
    const std::uint64_t base = parse_scenario_text(minimal).hash();
    EXPECT_EQ(parse_scenario_text(minimal).hash(), base);
    const std::vector<std::pair<std::string, std::string>> edits{
        {"carrier.frequency = 6e9", "carrier.frequency = 5.9e9"},
        {"carrier.subcarriers = 2", "carrier.subcarriers = 3\npilots.assigned = 1"},
        {"bs.center = [1, 0, 2]", "bs.center = [1, 0, 2.1]"},
        {"bs.counts = [4, 2]", "bs.counts = [4, 3]"},
        {"ris.0.center = [1, 2, 3]", "ris.0.center = [1, 2, 3.2]"},
        {"ris.0.counts = [4, 4]", "ris.0.counts = [5, 4]"},
        {"ris.0.grid = [2, 2, 1]", "ris.0.grid = [2, 1, 1]"},
        {"ris.0.region.z = [1.4, 1.8]", "ris.0.region.z = [1.5, 1.8]"},
        {"pilots.random = 2", "pilots.random = 2\ndesign.beta_ps = 0.2"},
        {"pilots.random = 2", "pilots.random = 2\ndesign.max_iters = 10"},
    };
    for (const auto& [from, to] : edits) {
        std::string text = minimal;
        text.replace(text.find(from), from.size(), to);
        EXPECT_NE(parse_scenario_text(text).hash(), base) << to;
    }
    // Run-time settings do not invalidate a codebook.
    for (const std::string extra : {"power.p_sym_dbw = -40\n", "seed = 9\n", "ue.k_rice = 3\n", "noise.figure_db = 7\n"})
        EXPECT_EQ(parse_scenario_text(minimal + extra).hash(), base) << extra;
}

} // namespace
