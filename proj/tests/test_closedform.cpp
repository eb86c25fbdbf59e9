// SPDX-License-Identifier: Apache-2.0
//
// Tests for the path-difference decomposition, the orthogonality / alignment certificates,
// and the two-user closed-form antenna placements.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <sstream>

#include "manta/analog.hpp"
#include "manta/closedform.hpp"
#include "manta/digital.hpp"
#include "test_util.hpp"

using namespace manta;
using namespace testutil;

namespace {

UserChannel single_path_user(const Vec3& anchor, cplx coeff) {
    UserChannel u;
    u.anchors = {anchor};
    u.prv.resize(1);
    u.prv(0) = coeff;
    return u;
}

std::vector<UserChannel> two_far_users() {
    return {single_path_user(Vec3(-5.0, -15.0, 20.0), std::polar(2.3e-4, 0.7)),
            single_path_user(Vec3(6.0, -15.0, 21.0), std::polar(1.1e-4, -1.9))};
}

} // namespace

TEST_CASE("path difference splits into integer and fractional wavelengths", "[closedform]") {
    const double lam = kLambda;

    auto d = decompose(1.7 * lam, lam);
    CHECK(d.n == 1);
    CHECK(d.phi == Catch::Approx(0.7).margin(1e-12));

    d = decompose(-0.3 * lam, lam);
    CHECK(d.n == -1);
    CHECK(d.phi == Catch::Approx(0.7).margin(1e-12));

    d = decompose(0.0, lam);
    CHECK(d.n == 0);
    CHECK(d.phi == 0.0);

    Rng rng(41);
    for (int rep = 0; rep < 200; ++rep) {
        const double delta = (rng.uniform() - 0.5) * 20.0;
        const auto p = decompose(delta, lam);
        REQUIRE(p.phi >= 0.0);
        REQUIRE(p.phi < 1.0);
        REQUIRE(std::abs((p.n + p.phi) * lam - delta) <= 1e-12);
    }
}

TEST_CASE("decompose survives the fractional part rounding up to one", "[closedform]") {
    // x = -2^-54: floor gives -1 and x - (-1) rounds to exactly 1.0, which must roll over.
    const double x = -std::ldexp(1.0, -54);
    const auto p = decompose(x, 1.0);
    CHECK(p.phi < 1.0);
    CHECK(p.n == 0);
    CHECK(p.phi == 0.0);
}

TEST_CASE("certificates demand single-element subarrays and single-path users", "[closedform]") {
    Rng rng(42);
    const auto geom = random_geometry(rng, 4, 2, 0.5); // N = 2
    const auto users = two_far_users();
    CHECK_THROWS_AS(check_digital_condition(geom, users, kLambda), Unsupported);
    CHECK_THROWS_AS(check_analog_condition(geom, users, kLambda), Unsupported);

    const auto single = random_geometry(rng, 4, 1, 0.5);
    auto multi = users;
    multi[1] = random_user(rng, 2); // 3 paths
    CHECK_THROWS_AS(check_digital_condition(single, multi, kLambda), Unsupported);
    CHECK_THROWS_AS(check_analog_condition(single, multi, kLambda), Unsupported);
}

TEST_CASE("identical users fail the orthogonality check and pass the alignment check",
          "[closedform]") {
    Rng rng(43);
    const auto geom = random_geometry(rng, 6, 1, 0.5);
    const auto u = single_path_user(Vec3(2.0, -15.0, 30.0), cplx(1e-4, 0.0));
    const std::vector<UserChannel> users = {u, u};

    const auto dig = check_digital_condition(geom, users, kLambda);
    REQUIRE(dig.pairs.size() == 1);
    CHECK(dig.pairs[0].residual == Catch::Approx(6.0).margin(1e-12));
    CHECK_FALSE(dig.pass);

    const auto ana = check_analog_condition(geom, users, kLambda);
    REQUIRE(ana.pairs.size() == 1);
    CHECK(ana.pairs[0].correlation == Catch::Approx(1.0).margin(1e-15));
    CHECK(ana.pass);
}

TEST_CASE("condition report serializes every pair", "[closedform]") {
    ConditionReport rep;
    rep.pass = true;
    rep.tolerance = 1e-8;
    rep.pairs.push_back({0, 1, 0.5, 0.25});
    rep.pairs.push_back({0, 2, 0.125, 0.0625});
    std::ostringstream os;
    write_condition_report(os, rep);
    const std::string text = os.str();
    CHECK(text.find("\"pass\": true") != std::string::npos);
    CHECK(text.find("\"k\": 0, \"khat\": 2") != std::string::npos);
    CHECK(text.find("0.0625") != std::string::npos);
}

TEST_CASE("constructed placement makes two channel vectors orthogonal", "[closedform]") {
    const auto users = two_far_users();
    RegionSpec region;
    region.side_A = 50.0 * kLambda;
    region.d_min = kLambda / 2.0;

    for (int m_count : {2, 5, 8}) {
        const auto geom = construct_digital_apv(users, m_count, region, kLambda);
        REQUIRE(geom.has_value());
        REQUIRE(geom->num_subarrays() == m_count);
        REQUIRE(validate(*geom, region).empty());

        const auto rep = check_digital_condition(*geom, users, kLambda);
        CHECK(rep.pass);

        const CMat h = channel_matrix(*geom, users, kLambda);
        const double cross = std::abs((h.col(0).adjoint() * h.col(1))(0, 0));
        CHECK(cross <= 1e-8 * h.col(0).norm() * h.col(1).norm());
    }
}

TEST_CASE("orthogonal placement reaches the zero-forcing ceiling", "[closedform]") {
    const auto users = two_far_users();
    RegionSpec region;
    region.side_A = 50.0 * kLambda;
    region.d_min = kLambda / 2.0;
    const int m_count = 8;

    const auto geom = construct_digital_apv(users, m_count, region, kLambda);
    REQUIRE(geom.has_value());

    const double gamma = zf_min_sinr(*geom, users, kPower, kNoise, kLambda);
    const double bound = min_sinr_upper_bound(users, m_count, 1, kPower, kNoise).bound;
    CHECK(gamma <= bound * (1.0 + 1e-9));
    CHECK(10.0 * std::log10(bound / gamma) <= 0.01);
}

TEST_CASE("quarter-wavelength nudge voids the certificate and costs rate", "[closedform]") {
    const auto users = two_far_users();
    RegionSpec region;
    region.side_A = 50.0 * kLambda;
    region.d_min = kLambda / 2.0;

    auto geom = construct_digital_apv(users, 8, region, kLambda);
    REQUIRE(geom.has_value());
    const double gamma_opt = zf_min_sinr(*geom, users, kPower, kNoise, kLambda);

    ArrayGeometry bumped = *geom;
    bumped.centers[3].x() += kLambda / 4.0;
    CHECK_FALSE(check_digital_condition(bumped, users, kLambda).pass);
    CHECK(zf_min_sinr(bumped, users, kPower, kNoise, kLambda) < gamma_opt);
}

TEST_CASE("construction reports infeasibility instead of forcing a layout", "[closedform]") {
    const auto users = two_far_users();

    RegionSpec cramped;
    cramped.side_A = 2.0 * kLambda;
    cramped.d_min = 3.0 * kLambda; // no two region points are this far apart
    CHECK_FALSE(construct_digital_apv(users, 3, cramped, kLambda).has_value());
    CHECK_FALSE(construct_analog_apv(users, 3, cramped, kLambda).has_value());

    RegionSpec region;
    region.side_A = 50.0 * kLambda;
    region.d_min = kLambda / 2.0;
    CHECK_THROWS_AS(construct_digital_apv({users[0]}, 4, region, kLambda), Unsupported);
    CHECK_THROWS_AS(construct_digital_apv(users, 0, region, kLambda), BadShape);
    auto multi = users;
    multi[0].anchors.push_back(Vec3(0.0, -15.0, 40.0));
    multi[0].prv.conservativeResize(2);
    multi[0].prv(1) = cplx(1e-5, 0.0);
    CHECK_THROWS_AS(construct_analog_apv(multi, 4, region, kLambda), Unsupported);
}

TEST_CASE("coincident users degenerate cleanly", "[closedform]") {
    const auto u = single_path_user(Vec3(2.0, -15.0, 30.0), cplx(1e-4, 0.0));
    const std::vector<UserChannel> users = {u, u};
    RegionSpec region;
    region.side_A = 50.0 * kLambda;
    region.d_min = 0.8 * kLambda;

    CHECK_FALSE(construct_digital_apv(users, 4, region, kLambda).has_value());

    const auto geom = construct_analog_apv(users, 4, region, kLambda);
    REQUIRE(geom.has_value());
    REQUIRE(geom->num_subarrays() == 4);
    REQUIRE(validate(*geom, region).empty());
    for (int m = 0; m < 4; ++m) {
        CHECK(geom->centers[m].y() == 0.0);
        CHECK(geom->centers[m].x() ==
              Catch::Approx(-region.side_A / 2.0 + m * 0.8 * kLambda).margin(1e-15));
    }
}

TEST_CASE("aligned placement reaches the common-phase ceiling", "[closedform]") {
    const auto users = two_far_users();
    RegionSpec region;
    region.side_A = 50.0 * kLambda;
    region.d_min = kLambda / 2.0;

    for (int m_count : {2, 4}) {
        const auto geom = construct_analog_apv(users, m_count, region, kLambda);
        REQUIRE(geom.has_value());
        REQUIRE(geom->num_subarrays() == m_count);
        REQUIRE(validate(*geom, region).empty());

        const auto rep = check_analog_condition(*geom, users, kLambda);
        REQUIRE(rep.pass);
        for (const auto& p : rep.pairs) CHECK(p.correlation >= 1.0 - 1e-10);

        // Conjugate phases for user 0 serve every aligned user at once.
        const CMat h = channel_matrix(*geom, users, kLambda);
        VecXd phases(m_count);
        for (int i = 0; i < m_count; ++i) phases(i) = std::arg(h(i, 0));
        const double eta = min_snr(*geom, phases, users, kPower, kNoise, kLambda);
        const double bound = min_snr_upper_bound(users, m_count, 1, kPower, kNoise);
        CHECK(eta <= bound * (1.0 + 1e-9));
        CHECK(10.0 * std::log10(bound / eta) <= 0.01);
    }
}
