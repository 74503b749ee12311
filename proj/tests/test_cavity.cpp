#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "ercav/cavity.hpp"
#include "ercav/error.hpp"

namespace ercav::cavity {
namespace {

// Frozen from an independent evaluation of the closed forms (R 60 um, L 6 um, 1535 nm, 100/30/13 ppm).
constexpr double kWaistUm = 2.965620028806478;
constexpr double kVolumeUm3 = 41.44499999999999;
constexpr double kFinesse = 43938.35879146564;
constexpr double kFsrHz = 24982704833333.332;
constexpr double kFwhmHz = 568585298.1424023;
constexpr double kQ = 343492.0556987542;

TEST(ModeGeometry, ReferenceCavityFrozenValues) {
    const auto g = mode_geometry(CavityParams{});
    EXPECT_NEAR(g.waist_um, kWaistUm, 1e-12 * kWaistUm);
    EXPECT_NEAR(g.mode_volume_um3, kVolumeUm3, 1e-12 * kVolumeUm3);
    EXPECT_NEAR(g.finesse, kFinesse, 1e-9 * kFinesse);
    EXPECT_NEAR(g.fsr_hz, kFsrHz, 1e-12 * kFsrHz);
    EXPECT_NEAR(g.fwhm_hz, kFwhmHz, 1e-9 * kFwhmHz);
    EXPECT_NEAR(g.q_factor, kQ, 1e-9 * kQ);
}

TEST(ModeGeometry, FwhmTimesFinesseIsFsr) {
    CavityParams c;
    c.length_um = 9.0;
    c.loss_ppm = 40.0;
    const auto g = mode_geometry(c);
    EXPECT_NEAR(g.fwhm_hz * g.finesse, g.fsr_hz, 1e-6 * g.fsr_hz);
}

TEST(ModeGeometry, RejectsUnstableResonator) {
    CavityParams c;
    c.length_um = 70.0;
    EXPECT_THROW((void)mode_geometry(c), InvalidParameter);
}

TEST(Finesse, InverseInTotalLoss) {
    EXPECT_NEAR(finesse_from_losses(100, 30, 13), kFinesse, 1e-9 * kFinesse);
    EXPECT_NEAR(finesse_from_losses(200, 60, 26), kFinesse / 2.0, 1e-9 * kFinesse);
    EXPECT_THROW((void)finesse_from_losses(0, 0, 0), InvalidParameter);
}

TEST(Transmission, ImpedanceMatchedIsUnity) {
    EXPECT_DOUBLE_EQ(resonant_transmission(50, 50, 0), 1.0);
    EXPECT_NEAR(resonant_transmission(100, 30, 13), 4.0 * 100 * 30 / (143.0 * 143.0), 1e-15);
}

TEST(Purcell, ExpectedFactorAtLoadedFinesse) {
    const auto g = mode_geometry(CavityParams{});
    const double q_loaded = g.q_factor * 20000.0 / g.finesse;
    EXPECT_NEAR(purcell_factor(0.13, 1535.0, q_loaded, g.mode_volume_um3), 134.79094797219003, 1e-9);
}

TEST(Purcell, HomogeneousInQAndV) {
    const double c = purcell_factor(0.13, 1535.0, 1.5e5, 41.4);
    EXPECT_NEAR(purcell_factor(0.13, 1535.0, 3.0e5, 41.4), 2.0 * c, 1e-12 * c);
    EXPECT_NEAR(purcell_factor(0.13, 1535.0, 1.5e5, 82.8), 0.5 * c, 1e-12 * c);
}

TEST(Purcell, LifetimeOfMeasuredFactor) {
    EXPECT_NEAR(purcell_lifetime(11e-3, 123.0), 8.870967741935483e-05, 1e-18);
    EXPECT_NEAR(purcell_from_lifetimes(11e-3, purcell_lifetime(11e-3, 123.0)), 123.0, 1e-9);
    EXPECT_DOUBLE_EQ(purcell_lifetime(11e-3, 0.0), 11e-3);
    EXPECT_THROW((void)purcell_lifetime(-1.0, 1.0), InvalidParameter);
}

TEST(LocalCoupling, UnityAtAntinodeOnAxisWithAlignedDipole) {
    const CavityParams c;
    EXPECT_NEAR(local_coupling({0, 0, 0.050}, 0.0, c), 1.0, 1e-12);
}

TEST(LocalCoupling, NodeAndOrthogonalDipoleVanish) {
    const CavityParams c;
    const double node_um = (50.0 + 1535.0 / 4.0) * 1e-3;
    EXPECT_NEAR(local_coupling({0, 0, node_um}, 0.0, c), 0.0, 1e-12);
    EXPECT_NEAR(local_coupling({0, 0, 0.050}, M_PI / 2.0, c), 0.0, 1e-12);
}

TEST(LocalCoupling, TransverseGaussianAtWaist) {
    const CavityParams c;
    const double w = mode_geometry(c).waist_um;
    EXPECT_NEAR(local_coupling({w, 0, 0.050}, 0.0, c), std::exp(-2.0), 1e-12);
}

TEST(LocalCoupling, BoundedInUnitIntervalProperty) {
    const CavityParams c;
    for (int i = 0; i < 2000; ++i) {
        const double t = i * 0.37;
        const double xi = local_coupling({std::sin(t) * 5, std::cos(1.3 * t) * 5, 0.2 * std::fmod(t, 1.0)}, t, c);
        ASSERT_GE(xi, 0.0);
        ASSERT_LE(xi, 1.0 + 1e-15);
    }
}

TEST(Escape, FiberShareOfTotalLoss) {
    EXPECT_NEAR(escape_efficiency(CavityParams{}), 100.0 / 143.0, 1e-15);
    EXPECT_NEAR(escape_efficiency(CavityParams{}, 171.0), 100.0 / 314.0, 1e-15);
}

TEST(Microscopy, DarkSpotAtScatterer) {
    const std::vector<Scatterer> s{{2.0, -3.0, 171.0}};
    GridSpec grid;
    grid.step_um = 0.5;
    const auto map = microscopy_map(s, CavityParams{}, grid);
    ASSERT_EQ(map.values.size(), map.xs_um.size() * map.ys_um.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < map.values.size(); ++i)
        if (map.values[i] < map.values[best]) best = i;
    EXPECT_DOUBLE_EQ(map.xs_um[best % map.xs_um.size()], 2.0);
    EXPECT_DOUBLE_EQ(map.ys_um[best / map.xs_um.size()], -3.0);
    EXPECT_NEAR(map.values[best], resonant_transmission(100, 30, 13 + 171), 1e-12);
}

TEST(Microscopy, EmptyMirrorIsFlat) {
    const auto map = microscopy_map({}, CavityParams{}, GridSpec{});
    for (double v : map.values) ASSERT_DOUBLE_EQ(v, resonant_transmission(100, 30, 13));
}

TEST(Microscopy, CsvHeaderAndRowCount) {
    GridSpec grid{-1.0, 1.0, -1.0, 1.0, 1.0};
    const auto map = microscopy_map({}, CavityParams{}, grid);
    std::ostringstream os;
    write_csv(map, os);
    const std::string text = os.str();
    EXPECT_EQ(text.rfind("x_um,y_um,transmission\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
}

}  // namespace
}  // namespace ercav::cavity
