#include <doctest.h>

#include "aniso/maximal.hpp"
#include "aniso/rng.hpp"
#include "oracles.hpp"

using namespace aniso;

namespace {

SchwartzProfile unit_gaussian(int n) {
    SchwartzProfile::Term t;
    for (int i = 0; i < n; ++i)
        t.axis.push_back(Factor1D::poly_gauss(detail::Poly{{1.0}}, 1.0, 8));
    return SchwartzProfile("gaussian", n, {std::move(t)}, std::numeric_limits<double>::infinity());
}

} // namespace

TEST_CASE("schwartz profile basics") {
    SchwartzProfile g = unit_gaussian(2);
    CHECK(g.integral() == doctest::Approx(1.0).epsilon(1e-10));
    std::vector<double> origin = {0.0, 0.0};
    CHECK(g.eval(origin) == doctest::Approx(1.0));
    Anisotropy iso({1.0, 1.0});
    // N = 0: sup <x>^0 |phi| = 1 at the origin
    CHECK(schwartz_norm(g, iso, 0) == doctest::Approx(1.0).epsilon(1e-6));
    // scaling linearity
    const double s1 = schwartz_norm(g, iso, 3);
    CHECK(schwartz_norm(g.scaled(2.5), iso, 3) == doctest::Approx(2.5 * s1).epsilon(1e-12));
}

TEST_CASE("schwartz norm matches a dense 1-d scan") {
    SchwartzProfile g = unit_gaussian(1);
    Anisotropy a1({1.0});
    // brute force: max over |alpha| <= 1 of <x>^1 |d^alpha phi| on a fine line
    double want = 0.0;
    for (int i = -40000; i <= 40000; ++i) {
        const double x = i * 2.5e-4;
        const double br = std::sqrt(1.0 + x * x);  // <x>_{(1)} = |(1,x)| Euclidean
        const double v0 = std::exp(-kPi * x * x);
        const double v1 = std::abs(-2.0 * kPi * x) * v0;
        want = std::max(want, br * std::max(v0, v1));
    }
    CHECK(schwartz_norm(g, a1, 1) == doctest::Approx(want).epsilon(1e-3));
}

TEST_CASE("default dictionary") {
    SchwartzDictionary d = default_dictionary(2, 12);
    CHECK(d.members.size() == 8);
    // bump supported in the unit Euclidean ball
    const SchwartzProfile& bump = d.members[3];
    CHECK(bump.support_radius() == doctest::Approx(1.0));
    std::vector<double> outside = {0.9, 0.9};
    CHECK(bump.eval(outside) == 0.0);
    CHECK(bump.integral() > 0.0);
    // mexican hat integrates to zero
    CHECK(std::abs(d.members[7].integral()) < 1e-10);
    // normalization brings every S_N norm to 1
    Anisotropy an({1.0, 2.0});
    SchwartzDictionary nd = d.normalized_for(an, 6);
    for (const auto& m : nd.members)
        CHECK(schwartz_norm(m, an, 6) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("hl maximal") {
    Anisotropy an({1.0, 2.0});
    RealGrid c({64, 64}, {2.0, 2.0}, 3.25);
    ScaleSet scales = ScaleSet::dyadic(-4, 0);
    RealGrid m = hl_maximal(an, c, scales);
    for (double v : m.values()) CHECK(v == doctest::Approx(3.25).epsilon(1e-13));

    // indicator of a grid-aligned cube: value 1 at the center for small r
    RealGrid chi({64, 64}, {2.0, 2.0});
    chi.fill_from([](std::span<const double> x) {
        return (std::abs(x[0]) < 0.5 && std::abs(x[1]) < 0.5) ? 1.0 : 0.0;
    });
    RealGrid m2 = hl_maximal(an, chi, ScaleSet{{0.25}});
    std::vector<std::size_t> center = {32, 32};
    CHECK(m2[m2.flat_index(center)] == doctest::Approx(1.0).epsilon(1e-13));

    // derived: average of the ball indicator over the smallest covering cube
    RealGrid ball({64, 64}, {2.0, 2.0});
    ball.fill_from([&](std::span<const double> x) {
        std::vector<double> xx(x.begin(), x.end());
        return quasi_norm(an, xx) < 1.0 ? 1.0 : 0.0;
    });
    const double r0 = 1.0;
    RealGrid m3 = hl_maximal(an, ball, ScaleSet{{r0}});
    std::vector<std::size_t> xi = {32, 32};
    CHECK(m3[m3.flat_index(xi)] == doctest::Approx(oracle::cube_average_at(an, ball, xi, r0)).epsilon(1e-12));
}

TEST_CASE("iterated maximal") {
    RealGrid c({32, 32}, {2.0, 2.0}, 1.5);
    RealGrid m = iterated_maximal(c);
    for (double v : m.values()) CHECK(v == doctest::Approx(1.5).epsilon(1e-12));

    // dominates hl pointwise
    Anisotropy an({1.0, 2.0});
    Rng rng(3);
    RealGrid f({64, 64}, {2.0, 2.0});
    for (auto& v : f.values()) v = rng.normal();
    RealGrid hl = hl_maximal(an, f, ScaleSet::dyadic(-4, 0));
    RealGrid it = iterated_maximal(f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(hl[i] <= it[i] + 1e-12);

    // 1-d brute-force oracle
    RealGrid line({64}, {4.0});
    line.fill_from([](std::span<const double> x) { return (x[0] > 0.0 && x[0] < 1.0) ? 1.0 : 0.0; });
    RealGrid ml = iterated_maximal(line);
    for (std::size_t j = 0; j < line.size(); j += 7)
        CHECK(ml[j] == doctest::Approx(oracle::interval_maximal_at(line.values(), j)).epsilon(1e-12));
}

TEST_CASE("radial maximal") {
    Anisotropy iso({1.0, 1.0});
    SchwartzProfile g = unit_gaussian(2);
    ScaleSet scales = ScaleSet::dyadic(-3, 1);

    RealGrid c({64, 64}, {4.0, 4.0}, 2.0);
    RealGrid m = radial_maximal(iso, c, g, scales);
    for (double v : m.values()) CHECK(v == doctest::Approx(2.0).epsilon(1e-10));

    RealGrid z({64, 64}, {4.0, 4.0});
    RealGrid mz = radial_maximal(iso, z, g, scales);
    CHECK(max_abs(mz) == 0.0);

    // gaussian * gaussian closed form: f * phi_t = (1+t^2)^{-1} exp(-pi|x|^2/(1+t^2))
    RealGrid f({256, 256}, {8.0, 8.0});
    f.fill_from([](std::span<const double> x) { return std::exp(-kPi * (x[0] * x[0] + x[1] * x[1])); });
    RealGrid mf = radial_maximal(iso, f, g, scales);
    std::vector<std::size_t> probe = {140, 150};
    std::vector<double> x = {f.coord(0, probe[0]), f.coord(1, probe[1])};
    double want = 0.0;
    for (double t : scales.scales) {
        const double s = 1.0 + t * t;
        want = std::max(want, std::exp(-kPi * (x[0] * x[0] + x[1] * x[1]) / s) / s);
    }
    CHECK(mf[f.flat_index(probe)] == doctest::Approx(want).epsilon(1e-6));

    SchwartzProfile hat = default_dictionary(2, 8).members[7];  // zero integral
    CHECK_THROWS_AS(radial_maximal(iso, f, hat, scales), std::domain_error);
}

TEST_CASE("nontangential maximal") {
    Anisotropy an({1.0, 2.0});
    SchwartzProfile g = unit_gaussian(2);
    ScaleSet scales = ScaleSet::dyadic(-2, 0);
    Rng rng(7);
    RealGrid f({64, 64}, {2.0, 2.0});
    for (auto& v : f.values()) v = rng.normal();

    RealGrid rad = radial_maximal(an, f, g, scales);
    RealGrid nt = nontangential_maximal(an, f, g, scales);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(nt[i] + 1e-12 >= rad[i]);

    RealGrid c({64, 64}, {2.0, 2.0}, 1.25);
    RealGrid ntc = nontangential_maximal(an, c, g, scales);
    for (double v : ntc.values()) CHECK(v == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("ball max filter equals the brute-force ball sup") {
    Rng rng(9);
    for (const std::vector<double>& av : {std::vector<double>{1.0, 2.0}, std::vector<double>{1.3, 1.0}}) {
        Anisotropy an(av);
        RealGrid layer({32, 32}, {2.0, 2.0});
        for (auto& v : layer.values()) v = std::abs(rng.normal());
        for (double t : {0.3, 0.9, 1.7}) {
            RealGrid out = ball_max_filter(an, layer, t);
            for (int probe = 0; probe < 20; ++probe) {
                std::vector<std::size_t> xi = {rng.integer(32), rng.integer(32)};
                CHECK(out[layer.flat_index(xi)] == oracle::ball_sup_at(an, layer, xi, t));
            }
        }
    }
    // n = 1 and n = 3 paths
    Anisotropy a1({1.5});
    RealGrid l1({64}, {2.0});
    for (auto& v : l1.values()) v = std::abs(rng.normal());
    RealGrid o1 = ball_max_filter(a1, l1, 0.7);
    for (int probe = 0; probe < 10; ++probe) {
        std::vector<std::size_t> xi = {rng.integer(64)};
        CHECK(o1[xi[0]] == oracle::ball_sup_at(a1, l1, xi, 0.7));
    }
    Anisotropy a3({1.0, 1.5, 2.0});
    RealGrid l3({16, 16, 16}, {2.0, 2.0, 2.0});
    for (auto& v : l3.values()) v = std::abs(rng.normal());
    RealGrid o3 = ball_max_filter(a3, l3, 0.8);
    for (int probe = 0; probe < 10; ++probe) {
        std::vector<std::size_t> xi = {rng.integer(16), rng.integer(16), rng.integer(16)};
        CHECK(o3[l3.flat_index(xi)] == oracle::ball_sup_at(a3, l3, xi, 0.8));
    }
}

TEST_CASE("grand maximal") {
    Anisotropy an({1.0, 2.0});
    ScaleSet scales = ScaleSet::dyadic(-2, 0);
    SchwartzDictionary dict = default_dictionary(2, 10);
    SchwartzDictionary nd = dict.normalized_for(an, 4);

    Rng rng(12);
    RealGrid f({64, 64}, {2.0, 2.0});
    for (auto& v : f.values()) v = rng.normal();

    // singleton dictionary equals that member's nontangential maximal
    SchwartzDictionary solo;
    solo.members.push_back(nd.members[0]);
    RealGrid g1 = grand_maximal(an, f, solo, scales);
    RealGrid g2 = nontangential_maximal(an, f, nd.members[0], scales);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-13));

    // constant response c * max |integral|
    RealGrid c({64, 64}, {2.0, 2.0}, 2.0);
    double maxint = 0.0;
    for (const auto& m : nd.members) maxint = std::max(maxint, std::abs(m.integral()));
    RealGrid gc = grand_maximal(an, c, nd, scales);
    CHECK(max_abs(gc) == doctest::Approx(2.0 * maxint).epsilon(1e-8));

    // Remark-2.5-style bound: any dictionary member's convolution sits below
    RealGrid grand = grand_maximal(an, f, nd, scales);
    const ComplexGrid fs = spectrum(f);
    for (std::size_t mi = 0; mi < nd.members.size(); ++mi) {
        RealGrid conv = convolve_profile(an, fs, nd.members[mi], 0.5, f);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(conv[i]) <= grand[i] + 1e-12);
    }

    // monotone in dictionary size and scale count
    SchwartzDictionary two;
    two.members = {nd.members[0], nd.members[1]};
    RealGrid gtwo = grand_maximal(an, f, two, scales);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(g1[i] <= gtwo[i] + 1e-15);
    RealGrid gfew = grand_maximal(an, f, nd, ScaleSet::dyadic(-1, 0));
    RealGrid gall = grand_maximal(an, f, nd, ScaleSet::dyadic(-2, 0));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(gfew[i] <= gall[i] + 1e-15);

    CHECK_THROWS_AS(grand_maximal(an, f, SchwartzDictionary{}, scales), std::domain_error);
}

TEST_CASE("hardy norm scale refinement stays within 5%") {
    Anisotropy an({1.0, 2.0});
    ExponentVector p({1.0, 1.0});
    RealGrid f({64, 64}, {2.0, 2.0});
    f.fill_from([](std::span<const double> x) {
        const double q = x[0] * x[0] + 4.0 * x[1] * x[1];
        return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
    });
    SchwartzDictionary base = default_dictionary(2);
    MaximalConfig octave(an, p, ScaleSet::dyadic(-4, 1), base);
    MaximalConfig quarter(an, p, ScaleSet::fractional(-4, 1, 4), base);
    const double h1 = hardy_norm(an, f, p, HardyMethod::Grand, octave);
    const double h2 = hardy_norm(an, f, p, HardyMethod::Grand, quarter);
    CHECK(std::abs(h2 / h1 - 1.0) < 0.05);
}

TEST_CASE("maximal operator norm ratios stay bounded (empirical)") {
    Anisotropy an({1.0, 2.0});
    Rng rng(77);
    RealGrid shape({64, 64}, {2.0, 2.0});
    for (const auto& pv : {std::vector<double>{2.0, 2.0}, std::vector<double>{2.0, 4.0},
                           std::vector<double>{4.0, 2.0}}) {
        ExponentVector p(pv);
        double worst = 0.0;
        for (int it = 0; it < 10; ++it) {
            RealGrid f = shape.like<double>();
            for (auto& v : f.values()) v = rng.normal();
            const double nf = mixed_norm(f, p);
            RealGrid m = hl_maximal(an, f, ScaleSet::dyadic(-4, 0));
            worst = std::max(worst, mixed_norm(m, p) / nf);
        }
        CHECK(worst < 8.0);  // Lemma-3.1-style boundedness, generous desk bound
    }
}

TEST_CASE("Fefferman-Stein vector-valued ratio (empirical)") {
    Anisotropy an({1.0, 2.0});
    ExponentVector p({2.0, 2.0});
    Rng rng(78);
    RealGrid shape({64, 64}, {2.0, 2.0});
    const double u = 2.0;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        RealGrid num = shape.like<double>(), den = shape.like<double>();
        for (int k = 0; k < 8; ++k) {
            RealGrid f = shape.like<double>();
            for (auto& v : f.values()) v = rng.normal();
            RealGrid m = hl_maximal(an, f, ScaleSet::dyadic(-4, 0));
            for (std::size_t i = 0; i < f.size(); ++i) {
                num[i] += std::pow(m[i], u);
                den[i] += std::pow(std::abs(f[i]), u);
            }
        }
        for (auto& v : num.values()) v = std::pow(v, 1.0 / u);
        for (auto& v : den.values()) v = std::pow(v, 1.0 / u);
        worst = std::max(worst, mixed_norm(num, p) / mixed_norm(den, p));
    }
    CHECK(worst < 8.0);
}

TEST_CASE("dilated ball-family norm growth exponent (Remark 3.2 style)") {
    Anisotropy an({1.0, 2.0});
    ExponentVector p({1.0, 1.0});
    const double r = p.p_minus() / 2.0;
    Rng rng(79);
    RealGrid shape({128, 128}, {4.0, 4.0});
    QuasiNormTable lut(an, shape.dims(), shape.half_widths());
    // random small ball family; fit || sum chi_{B^{(beta)}} || against beta
    std::vector<AnisoBall> balls;
    for (int b = 0; b < 6; ++b)
        balls.push_back(AnisoBall{{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}, rng.uniform(0.1, 0.25)});
    std::vector<double> lx, ly;
    for (double beta : {1.0, 2.0, 4.0, 8.0}) {
        RealGrid sum = shape.like<double>();
        const int n = 2;
        std::vector<std::size_t> gi(static_cast<std::size_t>(n));
        std::vector<double> d(static_cast<std::size_t>(n));
        for (std::size_t f = 0; f < sum.size(); ++f) {
            sum.unflatten(f, gi);
            for (const AnisoBall& B : balls) {
                for (int i = 0; i < n; ++i) {
                    double v = sum.coord(i, gi[static_cast<std::size_t>(i)]) - B.center[static_cast<std::size_t>(i)];
                    v -= 8.0 * std::round(v / 8.0);
                    d[static_cast<std::size_t>(i)] = v;
                }
                double s = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double ta = std::pow(beta * B.radius, an.a(i));
                    s += (d[static_cast<std::size_t>(i)] / ta) * (d[static_cast<std::size_t>(i)] / ta);
                }
                if (s < 1.0) sum[f] += 1.0;
            }
        }
        lx.push_back(std::log(beta));
        ly.push_back(std::log(mixed_norm(sum, p)));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double npts = static_cast<double>(lx.size());
    const double slope = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
    CHECK(slope <= an.nu() / r * 1.10);
}
