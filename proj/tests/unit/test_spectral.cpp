#include <gtest/gtest.h>

#include <isomlab/spectral.hpp>

using namespace isomlab;

namespace {

constexpr double pi = std::numbers::pi;

Vec vec3(double x, double y, double z) {
    Vec v(3);
    v << x, y, z;
    return v;
}

BandFunction random_band(Rng& rng, int L) {
    BandFunction f(L);
    for (auto& c : f.coeffs) c = cplx(std_normal(rng), std_normal(rng));
    return f;
}

IsometryMeasure pm(const Vec& v) {
    return IsometryMeasure({{Isometry::translation(v), 0.5}, {Isometry::translation(-v), 0.5}});
}

IsometryMeasure random_symmetric(Rng& rng, int k, double scale) {
    std::vector<IsometryMeasure::Atom> atoms;
    for (int i = 0; i < k; ++i) {
        Vec v = scale * vec3(std_normal(rng), std_normal(rng), std_normal(rng));
        atoms.push_back({Isometry(v, haar_rotation(3, rng)), 1.0 / k});
    }
    return symmetrize(IsometryMeasure(atoms));
}

}  // namespace

TEST(Rho, IdentityAndPureRotation) {
    auto id = rho_matrix(Isometry::identity(3), 0.7, 8);
    EXPECT_LT((id.entries - CMat::Identity(81, 81)).norm(), 1e-12);
    EXPECT_EQ(id.tail_bound, 0.0);
    Rng rng = make_stream(40, 0);
    Rotation R = haar_rotation(3, rng);
    auto rot = rho_matrix(Isometry(Vec::Zero(3), R), 2.0, 8);
    EXPECT_LT((rot.entries.adjoint() * rot.entries - CMat::Identity(81, 81)).norm(), 1e-10);
    EXPECT_NEAR(op_norm(rot).value, 1.0, 1e-12);
    for (int l = 0; l <= 8; ++l)
        EXPECT_LT((rot.entries.block(l * l, l * l, 2 * l + 1, 2 * l + 1) - wigner_D(l, R)).norm(), 1e-12);
}

TEST(Rho, TranslationOnConstantIsPlaneWave) {
    Vec v = vec3(0.2, -0.5, 0.3);
    auto op = rho_matrix(Isometry::translation(v), 1.3, 12);
    auto pw = plane_wave_coeffs(1.3, Eigen::Vector3d(v), 12);
    EXPECT_LT((op.entries.col(0) - pw.coeffs).norm(), 1e-13);
}

TEST(Rho, PointwiseActionWithinTailBound) {
    Rng rng = make_stream(41, 0);
    const int L = 24;
    Isometry g(vec3(0.3, 0.1, -0.2), haar_rotation(3, rng));
    const double r = 0.8;
    auto op = rho_matrix(g, r, L);
    auto phi = random_band(rng, op.safe_degree);
    BandFunction out(L, op.entries * phi.resized(L).coeffs);
    auto q = quadrature(L);
    auto vals = evaluate(out, q);
    double sup_phi = 0, worst = 0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        Eigen::Vector3d xi = q.nodes[k];
        Eigen::Vector3d back = g.rot.matrix().transpose() * xi;
        cplx direct = std::polar(1.0, -2 * pi * r * xi.dot(Eigen::Vector3d(g.v))) * evaluate_at(phi, back);
        worst = std::max(worst, std::abs(vals[k] - direct));
        sup_phi = std::max(sup_phi, std::abs(evaluate_at(phi, xi)));
    }
    // sup |phi| over nodes underestimates the true sup slightly; allow a factor 2
    EXPECT_LE(worst, 2 * op.tail_bound * sup_phi + 1e-10);
}

TEST(Rho, CompressionsMultiplyWithWideInnerBand) {
    Rng rng = make_stream(42, 0);
    Isometry g(vec3(0.2, 0.1, 0.1), haar_rotation(3, rng)), h(vec3(-0.1, 0.3, 0.0), haar_rotation(3, rng));
    const double r = 0.5;
    CMat direct = rho_block(compose(g, h), r, 6, 6);
    CMat via = rho_block(g, r, 30, 6) * rho_block(h, r, 6, 30);
    EXPECT_LT((direct - via).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SrMatrix, DeltaIdentityAndHermitian) {
    auto s = S_r_matrix(IsometryMeasure::delta(Isometry::identity(3)), 3.0, 6);
    EXPECT_LT((s.entries - CMat::Identity(49, 49)).norm(), 1e-12);
    Rng rng = make_stream(43, 0);
    auto mu = random_symmetric(rng, 3, 0.4);
    auto sr = S_r_matrix(mu, 1.1, 10);
    EXPECT_LT((sr.entries - sr.entries.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::SelfAdjointEigenSolver<CMat> es(sr.entries);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);  // compressions of a positive operator stay positive
    EXPECT_LE(op_norm(sr).value, 1.0 + sr.tail_bound + 1e-10);
}

TEST(SrMatrix, PlusMinusClosedForm) {
    Vec v = vec3(0.3, 0.4, 0.5);
    const double vn = v.norm();
    for (double rv : {0.05, 0.3, 1.0, 1.7, 2.0}) {
        double r = rv / vn;
        auto s = S_r_matrix(pm(v), r, 32);
        double got = s.entries.col(0).squaredNorm();
        double x = 4 * pi * r * vn;
        EXPECT_NEAR(got, 0.5 * (1 + std::sin(x) / x), 1e-8) << "r|v|=" << rv;
    }
}

TEST(OpNorm, Basics) {
    EXPECT_NEAR(op_norm(CMat(CMat::Identity(5, 5))).value, 1.0, 1e-14);
    Rng rng = make_stream(44, 0);
    CVec u(7), w(5);
    for (auto& c : u) c = cplx(std_normal(rng), std_normal(rng));
    for (auto& c : w) c = cplx(std_normal(rng), std_normal(rng));
    CMat r1 = u * w.adjoint();
    EXPECT_NEAR(op_norm(r1).value, u.norm() * w.norm(), 1e-12 * u.norm() * w.norm());
    CMat a(40, 30);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = cplx(std_normal(rng), std_normal(rng));
    auto p = power_norm(a, 1e-12, 100000);
    EXPECT_TRUE(p.converged);
    EXPECT_NEAR(p.value, op_norm(a).value, 1e-8);
}

TEST(OpNorm, PureRotationBlocksMatchWignerSums) {
    Rng rng = make_stream(45, 0);
    std::vector<IsometryMeasure::Atom> atoms;
    for (int i = 0; i < 3; ++i) atoms.push_back({Isometry(Vec::Zero(3), haar_rotation(3, rng)), 1.0 / 3});
    IsometryMeasure mu(atoms);
    auto s0 = S_r_matrix(mu, 0.0, 8);
    auto tg = t_gap(mu, 8);
    for (int l = 1; l <= 8; ++l) {
        CMat blk = s0.entries.block(l * l, l * l, 2 * l + 1, 2 * l + 1);
        CMat ref = CMat::Zero(2 * l + 1, 2 * l + 1);
        for (const auto& a : mu.atoms()) ref += a.weight * wigner_D(l, a.element.rot);
        Eigen::JacobiSVD<CMat> svd(ref);
        EXPECT_NEAR(op_norm(blk).value, svd.singularValues()(0), 1e-10);
        EXPECT_NEAR(tg.per_l[l - 1], svd.singularValues()(0), 1e-10);
    }
}

TEST(BandNorm, MatchesRectangularRoute) {
    // ||S_r P_s|| via the Gram identity against a wide rectangular compression
    Rng rng = make_stream(46, 0);
    auto mu = random_symmetric(rng, 2, 0.3);
    const double r = 0.6;
    const int s = 6;
    auto sv = band_singular_values(mu, r, s);
    CMat rect = S_r_block(mu, r, s, 40);
    Eigen::JacobiSVD<CMat> svd(rect);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(sv(k), svd.singularValues()(k), 1e-10);
}

TEST(Fr, Examples) {
    Vec v = vec3(1, 0, 0);
    auto f0 = F_r_function(pm(v), 0.0, 8);
    EXPECT_NEAR(std::abs(f0.F.coeffs(0) - 1.0), 0.0, 1e-15);
    EXPECT_LT(f0.F.coeffs.tail(f0.F.coeffs.size() - 1).norm(), 1e-15);
    for (double r : {0.1, 0.5, 1.5}) {
        auto fr = F_r_function(pm(v), r, 40);
        double x = 4 * pi * r;
        EXPECT_NEAR(fr.norm * fr.norm, 0.5 * (1 + std::sin(x) / x), 1e-8);
        EXPECT_LE(fr.dist_from_one, fr.bound);
    }
    std::vector<double> ratios;
    for (double r : {0.01, 0.02, 0.04, 0.08}) {
        auto fr = F_r_function(pm(v), r, 20);
        ratios.push_back((1 - fr.norm) / (r * r));
    }
    for (double q : ratios) EXPECT_GT(q, 0);
    // converging: successive differences shrink
    EXPECT_LT(std::abs(ratios[0] - ratios[1]), std::abs(ratios[2] - ratios[3]));
    EXPECT_THROW(F_r_function(pm(2 * v), 0.1, 8), PreconditionFailed);
}

TEST(TGap, Examples) {
    IsometryMeasure trans = pm(vec3(1, 0, 0));
    auto a = t_gap(trans, 5);
    for (double x : a.per_l) EXPECT_NEAR(x, 1.0, 1e-12);
    auto b = t_gap(IsometryMeasure::delta(Isometry(Vec::Zero(3), Rotation::rx(0.9))), 5);
    EXPECT_NEAR(b.value, 1.0, 1e-12);
    Rng rng = make_stream(47, 0);
    const int n = 10000;
    std::vector<RotationMeasure::Atom> atoms;
    for (int i = 0; i < n; ++i) atoms.push_back({haar_rotation(3, rng), 1.0 / n});
    auto c = t_gap(RotationMeasure(atoms), 4);
    EXPECT_LT(c.value, 8.0 / std::sqrt(double(n)) * 3);
    double prev = 0;
    for (int cap = 1; cap <= 4; ++cap) {
        double val = t_gap(RotationMeasure(atoms), cap).value;
        EXPECT_GE(val, prev);
        prev = val;
    }
}

TEST(Curve, DeltaIdentity) {
    auto c = spectral_curve(IsometryMeasure::delta(Isometry::identity(3)), {0.1, 1.0, 4.0}, 4);
    for (double n : c.norm) EXPECT_NEAR(n, 1.0, 1e-12);
    EXPECT_NEAR(c.c_fit, 0.0, 1e-12);
}

TEST(TwoRadius, EqualRadiiTrivial) {
    Rng rng = make_stream(48, 0);
    auto mu = random_symmetric(rng, 2, 0.3);
    auto t = two_radius_check(mu, 0.5, 0.5, 4, 1.0);
    EXPECT_TRUE(t.ok);
}

TEST(LittlewoodPaley, ConstantAlwaysPasses) {
    Rng rng = make_stream(49, 0);
    auto mu = random_symmetric(rng, 2, 0.3);
    auto rep = littlewood_paley_check(mu, 0.5, 16, 2, {BandFunction::constant(6)}, 6, 200, 3);
    ASSERT_EQ(rep.results.size(), 1u);
    EXPECT_TRUE(rep.results[0].ok);
    EXPECT_EQ(rep.spec.ranges.size(), 1u);
}

TEST(LittlewoodPaley, WordAverageMatchesExactConvolution) {
    // for a tiny measure the word law is enumerable
    Rng rng = make_stream(50, 0);
    auto mu = random_symmetric(rng, 1, 0.4);  // three atoms
    const int s = 4, len = 2;
    auto exact = S_r_block(convolve(mu, mu), 0.7, s, s);
    auto w = word_average(mu, 0.7, s, len, 20000, 20, 9);
    auto st = batch_stat(w, [&](const CMat& m) { return m(0, 0); });
    EXPECT_LT(std::abs(st.first - exact(0, 0)), 4 * st.second + 1e-12);
}

TEST(Schur, Examples) {
    CVec u0(1), v0(1);
    u0 << cplx(2, 0);
    v0 << cplx(0, 3);
    auto s0 = schur_average(0, u0, v0, 100, 1);
    EXPECT_NEAR(s0.mean, 36.0, 1e-12);
    CVec u(3);
    u << 1, 0, 0;
    auto s1 = schur_average(1, u, u, 100000, 2);
    EXPECT_NEAR(s1.expected, 1.0 / 3.0, 1e-15);
    EXPECT_LT(std::abs(s1.zscore()), 3.0);
}

TEST(Schur, HilbertSchmidtBound) {
    for (int l = 1; l <= 4; ++l) {
        auto h = hs_fourier_check(l, 0.8, 100000, 5);
        EXPECT_LE(h.exact, h.bound * (1 + 1e-12));
        EXPECT_LE(h.hs, 1.05 * h.bound);
        double sig = h.bound * std::sqrt(2.0 * l + 1) / std::sqrt(1e5) * 3;  // loose MC scale
        EXPECT_NEAR(h.hs, h.exact, sig + 0.1 * h.exact);
    }
}

TEST(Fourier, StepExamples) {
    Rng rng = make_stream(51, 0);
    auto phi = random_band(rng, 5);
    auto same = fourier_step(phi, IsometryMeasure::delta(Isometry::identity(3)), 1.0, 5);
    EXPECT_LT((same.coeffs - phi.coeffs).norm(), 1e-12);
    auto p0 = psi_r(2.0, Vec::Zero(3), 6);
    EXPECT_EQ(p0.coeffs(0), cplx(1.0));
    EXPECT_LT(p0.coeffs.tail(p0.coeffs.size() - 1).norm(), 1e-300);
}

TEST(Fourier, IterationMatchesEnumeration) {
    Rng rng = make_stream(52, 0);
    std::vector<IsometryMeasure::Atom> atoms;
    for (int i = 0; i < 3; ++i) atoms.push_back({Isometry(0.3 * vec3(std_normal(rng), std_normal(rng), std_normal(rng)), haar_rotation(3, rng)), 1.0 / 3});
    IsometryMeasure mu(atoms);
    Vec x0 = vec3(0.1, -0.2, 0.05);
    const double r = 0.9;
    const int L = 20;
    for (int l = 1; l <= 4; ++l) {
        auto it = fourier_iterate(mu, r, x0, l, L);
        auto law = act(mu, x0, l, kEnumerationCap, 0.0);
        BandFunction exact(L);
        for (const auto& a : law.atoms()) exact.coeffs += a.weight * plane_wave_coeffs(r, Eigen::Vector3d(a.element), L).coeffs;
        EXPECT_LE((it.phi.coeffs - exact.coeffs).norm(), it.err_bound);
    }
}
