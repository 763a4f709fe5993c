#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <isomlab/harmonics.hpp>

using namespace isomlab;
using boost::multiprecision::cpp_bin_float_50;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

constexpr double pi = std::numbers::pi;

cpp_int fact(int n) {
    cpp_int r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// Racah's closed form in exact arithmetic
double racah_3j(int j1, int j2, int j3, int m1, int m2, int m3) {
    if (m1 + m2 + m3 != 0) return 0;
    if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0;
    cpp_rational tri(fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3), fact(j1 + j2 + j3 + 1));
    cpp_rational pre = tri * cpp_rational(fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) * fact(j2 - m2) *
                                          fact(j3 + m3) * fact(j3 - m3));
    cpp_rational sum = 0;
    for (int k = 0; k <= j1 + j2 + j3; ++k) {
        int a = j3 - j2 + k + m1, b = j3 - j1 + k - m2, c = j1 + j2 - j3 - k, d = j1 - k - m1, e = j2 - k + m2;
        if (a < 0 || b < 0 || c < 0 || d < 0 || e < 0) continue;
        cpp_rational t(1, fact(k) * fact(a) * fact(b) * fact(c) * fact(d) * fact(e));
        sum += (k % 2) ? -t : t;
    }
    cpp_bin_float_50 v = cpp_bin_float_50(sum) * sqrt(cpp_bin_float_50(pre));
    if ((j1 - j2 - m3) % 2) v = -v;
    return static_cast<double>(v);
}

Eigen::Vector3d random_unit(Rng& rng) {
    Eigen::Vector3d v(std_normal(rng), std_normal(rng), std_normal(rng));
    return v.normalized();
}

BandFunction random_band(Rng& rng, int L) {
    BandFunction f(L);
    for (auto& c : f.coeffs) c = cplx(std_normal(rng), std_normal(rng));
    return f;
}

}  // namespace

TEST(SphHarm, LowDegreeAnchors) {
    Rng rng = make_stream(30, 0);
    for (int t = 0; t < 20; ++t) {
        auto xi = random_unit(rng);
        double th = std::acos(xi.z()), ph = std::atan2(xi.y(), xi.x());
        EXPECT_NEAR(std::abs(sph_harm(0, 0, xi) - 1.0), 0, 1e-15);
        EXPECT_NEAR(std::abs(sph_harm(1, 0, xi) - std::sqrt(3.0) * std::cos(th)), 0, 1e-13);
        EXPECT_NEAR(std::abs(sph_harm(1, 1, xi) + std::sqrt(1.5) * std::sin(th) * std::polar(1.0, ph)), 0, 1e-13);
        cplx y22 = std::sqrt(15.0 / 8.0) * std::pow(std::sin(th), 2) * std::polar(1.0, 2 * ph);
        EXPECT_NEAR(std::abs(sph_harm(2, 2, xi) - y22), 0, 1e-13);
    }
    EXPECT_THROW(sph_harm(1, 2, Eigen::Vector3d::UnitZ()), InvalidArgument);
}

TEST(SphHarm, OrthonormalUnderQuadrature) {
    const int L = 16;
    auto q = quadrature(L);
    std::vector<CVec> y;
    for (const auto& x : q.nodes) y.push_back(sph_harm_all(L, x));
    const int n = band_size(L);
    double worst = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b) {
            cplx s = 0;
            for (std::size_t k = 0; k < q.nodes.size(); ++k) s += q.weights[k] * y[k](a) * std::conj(y[k](b));
            worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    EXPECT_LT(worst, 1e-12);
}

TEST(SphHarm, NegativeOrderConjugation) {
    Rng rng = make_stream(31, 0);
    for (int t = 0; t < 20; ++t) {
        auto xi = random_unit(rng);
        auto y = sph_harm_all(10, xi);
        for (int l = 0; l <= 10; ++l)
            for (int m = 1; m <= l; ++m)
                EXPECT_LT(std::abs(y(lm_index(l, -m)) - ((m % 2) ? -1.0 : 1.0) * std::conj(y(lm_index(l, m)))), 1e-12);
    }
}

TEST(Quadrature, Examples) {
    auto q = quadrature(8);
    EXPECT_GE(q.exactness_degree, 17);
    std::vector<double> ones(q.nodes.size(), 1.0);
    EXPECT_NEAR(integrate(ones, q), 1.0, 1e-14);
    for (int l = 1; l <= 8; ++l)
        for (int m = -l; m <= l; ++m) {
            std::vector<cplx> v;
            for (const auto& x : q.nodes) v.push_back(sph_harm(l, m, x));
            EXPECT_LT(std::abs(integrate(v, q)), 1e-13);
        }
    Eigen::Vector3d w(0.3, -1.2, 2.0);
    std::vector<double> sq;
    for (const auto& x : q.nodes) sq.push_back(std::pow(x.dot(w), 2));
    EXPECT_NEAR(integrate(sq, q), w.squaredNorm() / 3.0, 1e-13);
}

TEST(Quadrature, EvaluateProjectRoundTrip) {
    Rng rng = make_stream(32, 0);
    auto f = random_band(rng, 12);
    auto q = quadrature(12);
    auto vals = evaluate(f, q);
    for (std::size_t k = 0; k < q.nodes.size(); k += 37) EXPECT_LT(std::abs(vals[k] - evaluate_at(f, q.nodes[k])), 1e-11);
    auto g = project(vals, q, 12);
    EXPECT_LT((g.coeffs - f.coeffs).norm(), 1e-11 * f.norm());
}

TEST(Bessel, Examples) {
    EXPECT_DOUBLE_EQ(bessel_j(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(bessel_j(1, 0), 0.0);
    EXPECT_NEAR(bessel_j(0, pi), 0.0, 1e-15);
    EXPECT_NEAR(bessel_j(2, 1.0), 2 * std::sin(1.0) - 3 * std::cos(1.0), 1e-15);
    EXPECT_NEAR(bessel_j(2, 1.0), 0.06204, 5e-6);
}

TEST(Bessel, AgreesWithStandardLibrary) {
    for (double x : {0.01, 0.5, 1.0, 3.7, 10.0, 25.0, 63.0, 120.0, 300.0}) {
        auto j = bessel_j_array(150, x);
        for (int l = 0; l <= 150; ++l) {
            double ref = std::sph_bessel(l, x);
            if (std::isnan(ref)) continue;  // libstdc++ gives up on some large orders
            EXPECT_NEAR(j[l], ref, 1e-13 + 1e-11 * std::abs(ref)) << "l=" << l << " x=" << x;
            EXPECT_LE(std::abs(j[l]), 1.0);
        }
    }
}

TEST(ThreeJ, MatchesExactRacah) {
    double worst = 0;
    for (int j1 = 0; j1 <= 6; ++j1)
        for (int j2 = 0; j2 <= 6; ++j2)
            for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3)
                for (int m1 = -j1; m1 <= j1; ++m1)
                    for (int m2 = -j2; m2 <= j2; ++m2) {
                        int m3 = -m1 - m2;
                        if (std::abs(m3) > j3) continue;
                        worst = std::max(worst, std::abs(wigner3j(j1, j2, j3, m1, m2, m3) - racah_3j(j1, j2, j3, m1, m2, m3)));
                    }
    EXPECT_LT(worst, 1e-13);
}

TEST(ThreeJ, LargeDegreesMatchExactRacah) {
    Rng rng = make_stream(33, 0);
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
        int j1 = 20 + static_cast<int>(uniform01(rng) * 60), j2 = 20 + static_cast<int>(uniform01(rng) * 60);
        int j3 = std::abs(j1 - j2) + static_cast<int>(uniform01(rng) * (j1 + j2 - std::abs(j1 - j2) + 1));
        j3 = std::min(j3, j1 + j2);
        int m1 = static_cast<int>(uniform01(rng) * (2 * j1 + 1)) - j1;
        int m2 = static_cast<int>(uniform01(rng) * (2 * j2 + 1)) - j2;
        if (std::abs(m1 + m2) > j3) continue;
        double ref = racah_3j(j1, j2, j3, m1, m2, -m1 - m2);
        worst = std::max(worst, std::abs(wigner3j(j1, j2, j3, m1, m2, -m1 - m2) - ref));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Gaunt, Examples) {
    EXPECT_NEAR(gaunt(0, 0, 0, 0, 0, 0), 1.0, 1e-15);
    EXPECT_EQ(gaunt(1, 0, 1, 0, 1, 0), 0.0);
    auto q = quadrature(4);
    std::vector<double> v;
    for (const auto& x : q.nodes) v.push_back(std::real(sph_harm(1, 0, x) * sph_harm(1, 0, x) * sph_harm(2, 0, x)));
    EXPECT_NEAR(gaunt(1, 0, 1, 0, 2, 0), integrate(v, q), 1e-12);
    EXPECT_NEAR(gaunt(1, 0, 1, 0, 2, 0), 2.0 / std::sqrt(5.0), 1e-14);
}

TEST(Gaunt, MatchesQuadratureAndPermutationSymmetric) {
    const int L = 5;
    auto q = quadrature(3 * L);
    std::vector<CVec> y;
    for (const auto& x : q.nodes) y.push_back(sph_harm_all(L, x));
    for (int l1 = 0; l1 <= L; ++l1)
        for (int l2 = 0; l2 <= L; ++l2)
            for (int l3 = 0; l3 <= L; ++l3)
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2) {
                        int m3 = -m1 - m2;
                        if (std::abs(m3) > l3) continue;
                        double g = gaunt(l1, m1, l2, m2, l3, m3);
                        cplx s = 0;
                        for (std::size_t k = 0; k < q.nodes.size(); ++k)
                            s += q.weights[k] * y[k](lm_index(l1, m1)) * y[k](lm_index(l2, m2)) * y[k](lm_index(l3, m3));
                        ASSERT_LT(std::abs(s - g), 1e-12);
                        EXPECT_NEAR(gaunt(l2, m2, l1, m1, l3, m3), g, 1e-12);
                        EXPECT_NEAR(gaunt(l3, m3, l2, m2, l1, m1), g, 1e-12);
                        EXPECT_NEAR(gaunt(l1, m1, l3, m3, l2, m2), g, 1e-12);
                    }
}

TEST(Wigner, IdentityAndZRotation) {
    for (int l = 0; l <= 10; ++l) {
        CMat d = wigner_D(l, Rotation(3));
        EXPECT_LT((d - CMat::Identity(2 * l + 1, 2 * l + 1)).norm(), 1e-12);
    }
    const double a = 0.7;
    CMat d1 = wigner_D(1, Rotation::rz(a));
    for (int mp = -1; mp <= 1; ++mp)
        for (int m = -1; m <= 1; ++m) {
            cplx want = mp == m ? std::polar(1.0, -m * a) : cplx(0);
            EXPECT_LT(std::abs(d1(mp + 1, m + 1) - want), 1e-14);
        }
    // phases agree with pointwise rotation of Y_1^m
    Rng rng = make_stream(34, 0);
    for (int t = 0; t < 10; ++t) {
        auto xi = random_unit(rng);
        Eigen::Vector3d back = Rotation::rz(-a).matrix() * xi;
        for (int m = -1; m <= 1; ++m)
            EXPECT_LT(std::abs(sph_harm(1, m, back) - std::polar(1.0, -m * a) * sph_harm(1, m, xi)), 1e-13);
    }
    EXPECT_THROW(wigner_D(kWignerCap + 1, Rotation(3)), CapExceeded);
}

TEST(Wigner, HomomorphismAndUnitarity) {
    Rng rng = make_stream(35, 0);
    for (int t = 0; t < 10; ++t) {
        Rotation a = haar_rotation(3, rng), b = haar_rotation(3, rng);
        for (int l = 0; l <= 8; ++l) {
            CMat da = wigner_D(l, a), db = wigner_D(l, b);
            EXPECT_LT((wigner_D(l, a * b) - da * db).norm(), 1e-9);
            EXPECT_LT((da.adjoint() * da - CMat::Identity(2 * l + 1, 2 * l + 1)).norm(), 1e-10);
        }
    }
    // Euler angle edge cases
    for (Rotation r : {Rotation::rx(pi), Rotation::ry(pi), Rotation::ry(1e-9) * Rotation::rz(0.4), Rotation::ry(pi - 1e-9) * Rotation::rz(0.4),
                       Rotation::rz(0.3) * Rotation::ry(pi / 2) * Rotation::rz(-1.1)})
        for (int l = 1; l <= 6; ++l) {
            Rotation s = haar_rotation(3, rng);
            EXPECT_LT((wigner_D(l, r * s) - wigner_D(l, r) * wigner_D(l, s)).norm(), 1e-9);
        }
}

TEST(Wigner, RotateBandIsPullback) {
    Rng rng = make_stream(36, 0);
    const int L = 10;
    auto f = random_band(rng, L);
    auto q = quadrature(L);
    for (int t = 0; t < 3; ++t) {
        Rotation r = haar_rotation(3, rng);
        auto g = rotate_band(f, r);
        EXPECT_NEAR(g.norm(), f.norm(), 1e-10 * f.norm());
        auto vals = evaluate(g, q);
        for (std::size_t k = 0; k < q.nodes.size(); k += 7) {
            Eigen::Vector3d back = r.matrix().transpose() * q.nodes[k];
            EXPECT_LT(std::abs(vals[k] - evaluate_at(f, back)), 1e-9);
        }
    }
}

TEST(PlaneWave, Examples) {
    auto f = plane_wave_coeffs(0.0, Eigen::Vector3d(1, 2, 3), 5);
    EXPECT_EQ(f.coeffs(0), cplx(1.0));
    EXPECT_LT(f.coeffs.tail(f.coeffs.size() - 1).norm(), 1e-300);
    Eigen::Vector3d v(0.3, -0.4, 1.1);
    for (double r : {0.1, 0.7, 2.5}) {
        auto g = plane_wave_coeffs(r, v, 20);
        // mean via a 1D Gauss-Legendre integral in cos(theta)
        const auto& gl = gauss_legendre(80);
        double x = 2 * pi * r * v.norm();
        cplx mean = 0;
        for (std::size_t i = 0; i < gl.x.size(); ++i) mean += 0.5 * gl.w[i] * std::polar(1.0, -x * gl.x[i]);
        EXPECT_LT(std::abs(g.coeffs(0) - mean), 1e-13);
        EXPECT_NEAR(g.coeffs(0).real(), std::sin(x) / x, 1e-13);
    }
}

TEST(PlaneWave, ResidualWithinTailBound) {
    Rng rng = make_stream(37, 0);
    const int L = 32;
    auto q = quadrature(L);
    for (int t = 0; t < 6; ++t) {
        Eigen::Vector3d v = random_unit(rng) * (0.3 + 1.7 * uniform01(rng));
        double r = 1.0;
        auto f = plane_wave_coeffs(r, v, L);
        auto vals = evaluate(f, q);
        double worst = 0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k)
            worst = std::max(worst, std::abs(vals[k] - std::polar(1.0, -2 * pi * r * q.nodes[k].dot(v))));
        double x = 2 * pi * r * v.norm();
        EXPECT_LE(worst, taylor_tail_bound(x, L + 1) + 1e-12);
        EXPECT_LE(worst, sup_tail_bound(x, L + 1) + 1e-12);
        // L2 tail of the coefficients
        auto big = plane_wave_coeffs(r, v, 60);
        for (int k : {5, 10, 20})
            EXPECT_LE(big.norm_above(k), sup_tail_bound(x, k) + 1e-14);
    }
}

TEST(LittlewoodPaley, DimensionFormula) {
    EXPECT_EQ(dim_H(3, 0), 1);
    for (int j = 0; j <= 20; ++j) EXPECT_EQ(dim_H(3, j), 2 * j + 1);
    EXPECT_EQ(dim_H(4, 2), 9);
    for (int j = 0; j <= 10; ++j) EXPECT_EQ(dim_H(4, j), (j + 1) * (j + 1));
    EXPECT_THROW(dim_H(1, 0), InvalidArgument);
}

TEST(LittlewoodPaley, N0) {
    EXPECT_EQ(n0(1.0, 1), 7);
    EXPECT_EQ(n0(0.01, 1), 1);
    EXPECT_EQ(n0(0.64, 1), 7);  // 100 r sqrt(L) = 64 exactly up to rounding
    EXPECT_EQ(n0(0.16, 4), 6);  // 100 * 0.16 * 2 = 32
    Rng rng = make_stream(38, 0);
    for (int t = 0; t < 200; ++t) {
        double r = std::exp(-5 + 8 * uniform01(rng));
        int L = 1 + static_cast<int>(uniform01(rng) * 1000);
        int n = n0(r, L);
        double x = 100 * r * std::sqrt(double(L));
        EXPECT_GE(n, 1);
        if (x >= 1) {
            EXPECT_LE(std::ldexp(1.0, n - 1), x * (1 + 1e-15));
            EXPECT_LT(x, std::ldexp(1.0, n));
        }
    }
}

TEST(LittlewoodPaley, BlocksPartitionAndParseval) {
    auto spec = block_spec(0.05, 4, 40);  // x = 10 -> n0 = 4
    EXPECT_EQ(spec.n0, 4);
    ASSERT_FALSE(spec.ranges.empty());
    EXPECT_EQ(spec.ranges.front(), std::make_pair(0, 16));
    EXPECT_EQ(spec.ranges[1], std::make_pair(17, 32));
    EXPECT_EQ(spec.ranges.back().second, 40);
    for (std::size_t i = 1; i < spec.ranges.size(); ++i) EXPECT_EQ(spec.ranges[i].first, spec.ranges[i - 1].second + 1);

    auto c = BandFunction::constant(40, 2.0);
    auto cb = project_blocks(c, spec);
    EXPECT_LT((cb[0].coeffs - c.coeffs).norm(), 1e-15);
    for (std::size_t i = 1; i < cb.size(); ++i) EXPECT_EQ(cb[i].norm(), 0.0);

    Rng rng = make_stream(39, 0);
    auto f = random_band(rng, 40);
    auto blocks = project_blocks(f, spec);
    double s2 = 0;
    BandFunction sum(40);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        s2 += std::pow(blocks[i].norm(), 2);
        sum = sum + blocks[i];
        for (std::size_t j = 0; j < i; ++j) EXPECT_LT(std::abs(inner(blocks[i], blocks[j])), 1e-12);
        for (int l = 0; l <= 40; ++l) {
            bool inside = l >= spec.ranges[i].first && l <= spec.ranges[i].second;
            if (!inside) EXPECT_EQ(blocks[i].coeffs.segment(l * l, 2 * l + 1).norm(), 0.0);
        }
    }
    EXPECT_NEAR(s2, std::pow(f.norm(), 2), 1e-12 * s2);
    EXPECT_EQ((sum.coeffs - f.coeffs).norm(), 0.0);
    EXPECT_THROW(project_blocks(f, block_spec(0.05, 4, 30)), InvalidArgument);
}
