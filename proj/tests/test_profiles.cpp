#include <doctest.h>

#include <cmath>

#include "levyk/profiles.hpp"
#include "levyk/quadrature.hpp"

using namespace levyk;
using namespace levyk::profiles;

namespace {

ProfileSpec relativistic_like(double delta) {
    ProfileSpec s;
    s.d = 1;
    s.kappa = KappaClass::poly_log(0.5, 0.0);
    s.m = 1.0;
    s.beta = 1.0;
    s.delta = delta;
    return s;
}

} // namespace

TEST_CASE("profile evaluation at pinned points") {
    // kappa = poly_log(0.5, 0), m = 1, beta = 1, delta = 0, c = e, d = 1:
    // f(1) = kappa(1) = 1 and f(2) = e * e^{-2} = e^{-1}.
    ProfileSpec s = relativistic_like(0.0);
    s.c = std::exp(1.0);
    Profile p(s);
    CHECK(profile_eval(p, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(profile_eval(p, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    // default c equals kappa(1) e^m here, so the resolved constant matches
    Profile pdef{relativistic_like(0.0)};
    CHECK(pdef.c() == doctest::Approx(std::exp(1.0)).epsilon(1e-14));

    // high-intensity class, any d: kappa(1/2) = 2^{d+2} log(3)^{-2}
    for (int d = 1; d <= 3; ++d) {
        ProfileSpec h;
        h.d = d;
        h.kappa = KappaClass::high_intensity();
        h.m = 1.0;
        h.beta = 1.0;
        h.delta = 0.0;
        Profile hp(h);
        const double expect = std::pow(0.5, -d - 2.0) / std::pow(std::log(3.0), 2.0);
        CHECK(profile_eval(hp, 0.5) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("junction continuity with the default constant") {
    for (auto kappa : {KappaClass::poly_log(0.5, 0.0), KappaClass::poly_log(1.6, 1.0),
                       KappaClass::poly_log(0.7, -4.0), KappaClass::high_intensity()}) {
        ProfileSpec s;
        s.d = 1;
        s.kappa = kappa;
        s.m = 0.7;
        s.beta = 1.0;
        s.delta = 0.5;
        Profile p(s);
        CHECK(p.eval(1.0 + 1e-13) == doctest::Approx(p.eval(1.0)).epsilon(1e-9));
    }
}

TEST_CASE("monotonization clips the spurious rise and nothing else") {
    ProfileSpec s;
    s.d = 1;
    s.kappa = KappaClass::poly_log(0.5, -4.0); // |a2|/(d+a1) = 8/3 > 2 log 2
    s.m = 1.0;
    s.beta = 1.0;
    s.delta = 0.0;
    Profile p(s);
    CHECK(p.r_star() < 1.0);
    CHECK(p.r_star() > 0.0);
    // r* solves (1+r) log(1+1/r) = |a2|/(d+a1)
    const double lhs = (1.0 + p.r_star()) * std::log1p(1.0 / p.r_star());
    CHECK(lhs == doctest::Approx(4.0 / 1.5).epsilon(1e-10));
    // stored profile equals the raw formula left of r* and is flat after
    auto raw = [](double r) {
        return std::pow(r, -1.5) * std::pow(std::log1p(1.0 / r), -4.0);
    };
    CHECK(p.kappa(0.5 * p.r_star()) ==
          doctest::Approx(raw(0.5 * p.r_star())).epsilon(1e-13));
    CHECK(p.kappa(0.99) == doctest::Approx(raw(p.r_star())).epsilon(1e-13));
    CHECK(p.kappa1() == doctest::Approx(raw(p.r_star())).epsilon(1e-13));
    // comparability: raw kappa increases on (r*, 1], so the stored flat value
    // sits within the analytic band [kappa(r*)/kappa(1), 1] of the raw one
    const double band = raw(p.r_star()) / raw(1.0);
    CHECK(band < 1.0);
    for (double r : {0.2, 0.5, 0.9, 0.999}) {
        const double ratio = p.kappa(r) / raw(r);
        CHECK(ratio <= 1.0 + 1e-12);
        CHECK(ratio >= band * (1.0 - 1e-12));
    }
}

TEST_CASE("profiles are nonincreasing on a dense grid") {
    std::vector<ProfileSpec> specs;
    {
        ProfileSpec a = relativistic_like(1.25);
        specs.push_back(a);
        ProfileSpec b;
        b.d = 2;
        b.kappa = KappaClass::pure_log();
        b.m = 1.0;
        b.beta = 0.5;
        b.delta = 0.0;
        specs.push_back(b);
        ProfileSpec c;
        c.d = 1;
        c.kappa = KappaClass::poly_log(0.5, -4.0);
        c.m = 2.0;
        c.beta = 2.0;
        c.delta = 3.0;
        specs.push_back(c);
        ProfileSpec e;
        e.d = 3;
        e.kappa = KappaClass::high_intensity();
        e.m = 0.0;
        e.beta = 1.0;
        e.delta = 3.5;
        specs.push_back(e);
    }
    for (const auto& s : specs) {
        Profile p(s);
        auto grid = log_space(1e-6, 50.0, 400);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            CHECK(p.eval(grid[i]) >= p.eval(grid[i + 1]) * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("small-radius doubling stays bounded") {
    for (auto kappa : {KappaClass::pure_log(), KappaClass::poly_log(1.9, 3.0),
                       KappaClass::high_intensity()}) {
        ProfileSpec s;
        s.d = kappa.variant == KappaVariant::pure_log ? 3 : 1;
        s.kappa = kappa;
        s.m = 1.0;
        s.beta = 1.0;
        s.delta = 1.0;
        Profile p(s);
        for (double r : log_space(1e-12, 0.25, 60)) {
            const double ratio = p.eval(r) / p.eval(2.0 * r);
            CHECK(ratio >= 1.0 - 1e-12);
            CHECK(ratio <= 32.0);
        }
    }
}

TEST_CASE("admissibility rejections") {
    ProfileSpec s = relativistic_like(0.0);
    SUBCASE("m = 0 requires delta > d") {
        s.m = 0.0;
        s.delta = 1.0; // == d
        CHECK_THROWS_AS(Profile{s}, validation_error);
    }
    SUBCASE("junction constant ceiling") {
        s.c = std::exp(1.0) * 1.01; // kappa(1) e^m = e
        CHECK_THROWS_AS(Profile{s}, validation_error);
        s.c = -1.0;
        CHECK_THROWS_AS(Profile{s}, validation_error);
    }
    SUBCASE("beta range") {
        s.beta = 2.5;
        CHECK_THROWS_AS(Profile{s}, validation_error);
        s.beta = 0.0;
        CHECK_THROWS_AS(Profile{s}, validation_error);
    }
    SUBCASE("negative delta with tempering") {
        s.delta = -0.5;
        CHECK_THROWS_AS(Profile{s}, validation_error);
    }
    SUBCASE("alpha1 = 2 needs alpha2 < -1 for a finite second moment") {
        s.kappa = KappaClass::poly_log(2.0, -1.0);
        CHECK_THROWS_AS(Profile{s}, validation_error);
        s.kappa = KappaClass::poly_log(2.0, -1.5); // admissible
        CHECK_NOTHROW(Profile{s});
    }
    SUBCASE("domain errors") {
        Profile p(relativistic_like(0.0));
        CHECK_THROWS_AS(p.eval(0.0), validation_error);
        CHECK_THROWS_AS(p.eval(-1.0), validation_error);
        CHECK_THROWS_AS(p.kappa(1.5), validation_error);
    }
}

TEST_CASE("levy_density is radial and undefined at the origin") {
    ProfileSpec s;
    s.d = 2;
    s.kappa = KappaClass::poly_log(0.5, 0.0);
    s.m = 1.0;
    s.beta = 1.0;
    s.delta = 0.0;
    Model model(s);
    const double at5 = model.profile().eval(5.0);
    CHECK(levy_density(model, {3.0, 4.0}) == doctest::Approx(at5).epsilon(1e-14));
    CHECK(levy_density(model, {0.0, -5.0}) == doctest::Approx(at5).epsilon(1e-14));
    CHECK_THROWS_AS(levy_density(model, {0.0, 0.0}), validation_error);
    CHECK_THROWS_AS(levy_density(model, {1.0}), validation_error);
}

TEST_CASE("tail mass closed forms") {
    // d=1, m=1, beta=1, delta=0, c=e: 2 integral_1^inf e^{1-s} ds = 2.
    ProfileSpec s = relativistic_like(0.0);
    s.c = std::exp(1.0);
    Model model(s);
    CHECK(tail_mass(model, 1.0) == doctest::Approx(2.0).epsilon(1e-9));

    // polynomial tail, d=1, delta=3, c=1: 2 integral_2^inf s^{-3} ds = 1/4.
    ProfileSpec q;
    q.d = 1;
    q.kappa = KappaClass::poly_log(0.5, 0.0);
    q.m = 0.0;
    q.delta = 3.0;
    q.c = 1.0;
    Model poly(q);
    CHECK(tail_mass(poly, 2.0) == doctest::Approx(0.25).epsilon(1e-10));

    // monotone in r
    const double t1 = tail_mass(model, 0.01);
    const double t2 = tail_mass(model, 0.1);
    const double t3 = tail_mass(model, 5.0);
    CHECK(t1 > t2);
    CHECK(t2 > t3);
    CHECK(t3 > 0.0);
}

TEST_CASE("small-jump second moment closed forms and the marginal class") {
    // poly_log(alpha1, 0), d = 1, r = 1: 2 integral_0^1 s^{1-alpha1} ds = 2/(2-alpha1).
    for (double a1 : {0.5, 1.5}) {
        ProfileSpec s;
        s.d = 1;
        s.kappa = KappaClass::poly_log(a1, 0.0);
        s.m = 1.0;
        s.beta = 1.0;
        s.delta = 0.0;
        Model model(s);
        CHECK(small_jump_second_moment(model, 1.0) ==
              doctest::Approx(2.0 / (2.0 - a1)).epsilon(1e-9));
        // r < 1 closed form: 2 r^{2-alpha1} / (2-alpha1)
        CHECK(small_jump_second_moment(model, 0.25) ==
              doctest::Approx(2.0 * std::pow(0.25, 2.0 - a1) / (2.0 - a1)).epsilon(1e-9));
    }

    // high_intensity, d = 1: 2 integral_0^1 s^{-1} log(1+1/s)^{-2} ds.
    // Independent oracle: truncate at eps with the exact sandwich
    //   integral_0^eps s^{-1} L^{-2} ds in [1/L(eps), (1+eps)/L(eps)].
    ProfileSpec h;
    h.d = 1;
    h.kappa = KappaClass::high_intensity();
    h.m = 1.0;
    h.beta = 1.0;
    h.delta = 0.0;
    Model model(h);
    const double eps = 1e-10;
    const double body = quad::integrate(
        [](double u) { return std::pow(std::log1p(std::exp(-u)), -2.0); },
        std::log(eps), 0.0, {1e-12, 1e-10});
    const double oracle = 2.0 * (body + 1.0 / std::log1p(1.0 / eps));
    CHECK(small_jump_second_moment(model, 1.0) ==
          doctest::Approx(oracle).epsilon(1e-7));
    CHECK(std::isfinite(small_jump_second_moment(model, 1.0)));
}

TEST_CASE("model drift defaults and validation") {
    ProfileSpec s = relativistic_like(1.25);
    Model m0(s);
    CHECK(m0.drift() == std::vector<double>{0.0});
    Model m1(s, {0.25});
    CHECK(m1.drift()[0] == 0.25);
    CHECK_THROWS_AS(Model(s, {1.0, 2.0}), validation_error);
    ProfileSpec s3 = s;
    s3.d = 3;
    Model m3(s3);
    CHECK(m3.drift().size() == 3);
}
