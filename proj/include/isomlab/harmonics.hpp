#pragma once

// Spherical harmonics on S^2 with respect to the normalized surface measure
// (total mass 1), so Y_0^0 = 1 and Y_lm = sqrt(4 pi) * (usual orthonormal Y_lm),
// Condon-Shortley phase.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "geom.hpp"

namespace isomlab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr int kWignerCap = 256;

inline int lm_index(int l, int m) { return l * l + l + m; }
inline int band_size(int lmax) { return (lmax + 1) * (lmax + 1); }

struct BandFunction {
    int lmax = 0;
    CVec coeffs = CVec::Zero(1);

    BandFunction() = default;
    explicit BandFunction(int L) : lmax(L), coeffs(CVec::Zero(band_size(L))) {
        if (L < 0) throw InvalidArgument("band limit must be >= 0");
    }
    BandFunction(int L, CVec c) : lmax(L), coeffs(std::move(c)) {
        if (coeffs.size() != band_size(L)) throw DimensionMismatch("BandFunction: coefficient length");
    }
    static BandFunction constant(int L, cplx value = 1.0) {
        BandFunction f(L);
        f.coeffs(0) = value;
        return f;
    }
    cplx& operator()(int l, int m) { return coeffs(lm_index(l, m)); }
    cplx operator()(int l, int m) const { return coeffs(lm_index(l, m)); }
    double norm() const { return coeffs.norm(); }

    // zero-pad or truncate
    BandFunction resized(int L) const {
        BandFunction out(L);
        int n = std::min(band_size(L), band_size(lmax));
        out.coeffs.head(n) = coeffs.head(n);
        return out;
    }
    double norm_above(int l) const {
        if (l > lmax) return 0.0;
        int start = l * l;
        return coeffs.tail(coeffs.size() - start).norm();
    }
};

inline BandFunction operator+(const BandFunction& a, const BandFunction& b) {
    int L = std::max(a.lmax, b.lmax);
    return BandFunction(L, a.resized(L).coeffs + b.resized(L).coeffs);
}

inline cplx inner(const BandFunction& a, const BandFunction& b) {
    int n = std::min(a.coeffs.size(), b.coeffs.size());
    return b.coeffs.head(n).dot(a.coeffs.head(n));  // <a, b> = sum a conj(b)
}

// ---------------------------------------------------------------------------
// associated Legendre functions, normalized so that
// Y_lm(theta, phi) = P[l, m](cos theta) e^{i m phi}, m >= 0

inline int plm_index(int l, int m) { return l * (l + 1) / 2 + m; }

inline std::vector<double> legendre_table(int lmax, double x, double s) {
    std::vector<double> p(plm_index(lmax, lmax) + 1, 0.0);
    p[0] = 1.0;
    double pmm = 1.0;
    for (int m = 0; m <= lmax; ++m) {
        if (m > 0) {
            pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
            p[plm_index(m, m)] = pmm;
        }
        if (m + 1 <= lmax) p[plm_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
        for (int l = m + 2; l <= lmax; ++l) {
            double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
            double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
            p[plm_index(l, m)] = a * (x * p[plm_index(l - 1, m)] - b * p[plm_index(l - 2, m)]);
        }
    }
    return p;
}

inline void unit_check(const Eigen::Vector3d& xi) {
    if (std::abs(xi.norm() - 1.0) > 1e-9) throw InvalidArgument("expected a unit vector");
}

// all Y_lm(xi) for l <= lmax, (l,m) ordering
inline CVec sph_harm_all(int lmax, const Eigen::Vector3d& xi) {
    double z = std::clamp(xi.z(), -1.0, 1.0);
    double s = std::hypot(xi.x(), xi.y());
    double phi = std::atan2(xi.y(), xi.x());
    auto p = legendre_table(lmax, z, s);
    CVec out(band_size(lmax));
    for (int m = 0; m <= lmax; ++m) {
        cplx e = std::polar(1.0, m * phi);
        double sign = (m % 2) ? -1.0 : 1.0;
        for (int l = m; l <= lmax; ++l) {
            cplx y = p[plm_index(l, m)] * e;
            out(lm_index(l, m)) = y;
            if (m > 0) out(lm_index(l, -m)) = sign * std::conj(y);
        }
    }
    return out;
}

inline cplx sph_harm(int l, int m, const Eigen::Vector3d& xi) {
    if (l < 0 || std::abs(m) > l) throw InvalidArgument("sph_harm: index out of range");
    unit_check(xi);
    return sph_harm_all(l, xi)(lm_index(l, m));
}

// ---------------------------------------------------------------------------
// quadrature

struct GaussLegendre {
    std::vector<double> x, w;  // weights sum to 2
};

inline GaussLegendre compute_gauss_legendre(int n) {
    GaussLegendre g;
    g.x.resize(n);
    g.w.resize(n);
    constexpr double pi = std::numbers::pi;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1, p1 = x;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.x[i] = x;
        g.w[i] = w;
        g.x[n - 1 - i] = -x;
        g.w[n - 1 - i] = w;
    }
    return g;
}

inline const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(compute_gauss_legendre(n));
    return *slot;
}

struct SphereQuadrature {
    std::vector<Eigen::Vector3d> nodes;
    std::vector<double> weights;  // sum to 1
    int exactness_degree = 0;
    int lmax = 0;
    int n_theta = 0, n_phi = 0;  // node (i, j) at index i * n_phi + j
    std::vector<double> cos_theta, phi;
};

inline SphereQuadrature quadrature(int lmax) {
    if (lmax < 0) throw InvalidArgument("quadrature: Lmax must be >= 0");
    SphereQuadrature q;
    q.lmax = lmax;
    q.n_theta = lmax + 1;
    q.n_phi = 2 * lmax + 2;
    q.exactness_degree = 2 * lmax + 1;
    const auto& gl = gauss_legendre(q.n_theta);
    q.cos_theta = gl.x;
    for (int j = 0; j < q.n_phi; ++j) q.phi.push_back(2.0 * std::numbers::pi * j / q.n_phi);
    for (int i = 0; i < q.n_theta; ++i) {
        double z = gl.x[i], s = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < q.n_phi; ++j) {
            q.nodes.emplace_back(s * std::cos(q.phi[j]), s * std::sin(q.phi[j]), z);
            q.weights.push_back(gl.w[i] / (2.0 * q.n_phi));
        }
    }
    return q;
}

template <class V>
auto integrate(const V& values, const SphereQuadrature& q) {
    using T = std::decay_t<decltype(values[0])>;
    if (static_cast<std::size_t>(values.size()) != q.weights.size())
        throw DimensionMismatch("integrate: value count differs from node count");
    T s{};
    for (std::size_t i = 0; i < q.weights.size(); ++i) s += q.weights[i] * values[i];
    return s;
}

// values of phi at the quadrature nodes
inline std::vector<cplx> evaluate(const BandFunction& f, const SphereQuadrature& q) {
    std::vector<cplx> out(q.nodes.size());
    for (int i = 0; i < q.n_theta; ++i) {
        double z = q.cos_theta[i], s = std::sqrt(std::max(0.0, 1.0 - z * z));
        auto p = legendre_table(f.lmax, z, s);
        for (int j = 0; j < q.n_phi; ++j) {
            cplx acc = 0;
            for (int m = -f.lmax; m <= f.lmax; ++m) {
                int am = std::abs(m);
                double sign = (m < 0 && (am % 2)) ? -1.0 : 1.0;
                cplx e = std::polar(1.0, m * q.phi[j]);
                cplx part = 0;
                for (int l = am; l <= f.lmax; ++l) part += f.coeffs(lm_index(l, m)) * p[plm_index(l, am)];
                acc += sign * part * e;
            }
            out[i * q.n_phi + j] = acc;
        }
    }
    return out;
}

inline cplx evaluate_at(const BandFunction& f, const Eigen::Vector3d& xi) {
    return sph_harm_all(f.lmax, xi).cwiseProduct(f.coeffs).sum();
}

// coefficients of a function given at nodes; exact when the product degree fits the quadrature
inline BandFunction project(const std::vector<cplx>& values, const SphereQuadrature& q, int lmax) {
    if (values.size() != q.nodes.size()) throw DimensionMismatch("project: value count");
    BandFunction f(lmax);
    for (int i = 0; i < q.n_theta; ++i) {
        double z = q.cos_theta[i], s = std::sqrt(std::max(0.0, 1.0 - z * z));
        auto p = legendre_table(lmax, z, s);
        for (int j = 0; j < q.n_phi; ++j) {
            cplx val = values[i * q.n_phi + j] * q.weights[i * q.n_phi + j];
            for (int m = -lmax; m <= lmax; ++m) {
                int am = std::abs(m);
                double sign = (m < 0 && (am % 2)) ? -1.0 : 1.0;
                cplx e = std::polar(1.0, -m * q.phi[j]) * val * sign;
                for (int l = am; l <= lmax; ++l) f.coeffs(lm_index(l, m)) += p[plm_index(l, am)] * e;
            }
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// spherical Bessel functions j_0..j_lmax at x

inline std::vector<double> bessel_j_array(int lmax, double x) {
    if (lmax < 0 || x < 0) throw InvalidArgument("bessel_j: need l >= 0, x >= 0");
    std::vector<double> j(lmax + 1, 0.0);
    if (x == 0) {
        j[0] = 1.0;
        return j;
    }
    if (x > lmax) {
        j[0] = std::sin(x) / x;
        if (lmax >= 1) j[1] = std::sin(x) / (x * x) - std::cos(x) / x;
        for (int l = 1; l < lmax; ++l) j[l + 1] = (2.0 * l + 1.0) / x * j[l] - j[l - 1];
        return j;
    }
    // Miller: downward from well above max(lmax, x)
    int start = lmax + 20 + static_cast<int>(std::sqrt(40.0 * (lmax + 1)));
    double jp1 = 0.0, jc = 1e-300;
    std::vector<double> tmp(start + 1, 0.0);
    tmp[start] = jc;
    for (int l = start; l >= 1; --l) {
        double jm1 = (2.0 * l + 1.0) / x * jc - jp1;
        jp1 = jc;
        jc = jm1;
        tmp[l - 1] = jc;
        if (std::abs(jc) > 1e250) {
            for (int k = l - 1; k <= start; ++k) tmp[k] *= 1e-250;
            jc *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    double j0 = std::sin(x) / x;
    double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    double scale = std::abs(j0) >= std::abs(j1) ? j0 / tmp[0] : j1 / tmp[1];
    for (int l = 0; l <= lmax; ++l) j[l] = tmp[l] * scale;
    return j;
}

inline double bessel_j(int l, double x) { return bessel_j_array(l, x)[l]; }

// ---------------------------------------------------------------------------
// Wigner 3j symbols by three-term recursion in the first degree

struct ThreeJ {
    int jmin = 0;
    int jmax = -1;
    std::vector<double> f;  // f[j - jmin]
    double at(int j) const { return (j < jmin || j > jmax) ? 0.0 : f[j - jmin]; }
};

// (j j2 j3; -m2-m3 m2 m3) for every admissible j
inline void wigner3j_range(int j2, int j3, int m2, int m3, ThreeJ& out) {
    out.f.clear();
    const int m1 = -m2 - m3;
    out.jmin = std::max(std::abs(j2 - j3), std::abs(m1));
    out.jmax = j2 + j3;
    if (std::abs(m2) > j2 || std::abs(m3) > j3 || out.jmin > out.jmax) {
        out.jmax = out.jmin - 1;
        return;
    }
    const int jmin = out.jmin, jmax = out.jmax, n = jmax - jmin + 1;
    out.f.assign(n, 0.0);
    auto A = [&](int j) {
        double a = (double(j) * j - double(j2 - j3) * (j2 - j3)) * (double(j2 + j3 + 1) * (j2 + j3 + 1) - double(j) * j) *
                   (double(j) * j - double(m1) * m1);
        return std::sqrt(std::max(a, 0.0));
    };
    auto B = [&](int j) {
        return -(2.0 * j + 1.0) *
               (double(j2) * (j2 + 1) * m1 - double(j3) * (j3 + 1) * m1 - double(j) * (j + 1) * (m3 - m2));
    };
    auto& f = out.f;
    if (n == 1) {
        f[0] = 1.0;
    } else {
        // forward from jmin until the first local maximum of |f|
        std::vector<double> fw(n, 0.0);
        fw[0] = 1.0;
        if (jmin == 0)
            fw[1] = m2 / std::sqrt(double(j2) * (j2 + 1));
        else
            fw[1] = -B(jmin) / (jmin * A(jmin + 1));
        int jf = 1;  // index reached
        while (jf + 1 < n && std::abs(fw[jf]) >= std::abs(fw[jf - 1])) {
            int j = jmin + jf;
            fw[jf + 1] = -(B(j) * fw[jf] + (j + 1) * A(j) * fw[jf - 1]) / (j * A(j + 1));
            ++jf;
            if (std::abs(fw[jf]) > 1e200)
                for (int k = 0; k <= jf; ++k) fw[k] *= 1e-200;
        }
        // backward from jmax down to index jf - 1
        std::vector<double> bw(n, 0.0);
        bw[n - 1] = 1.0;
        int lo = std::max(jf - 1, 0);
        if (n - 2 >= lo) bw[n - 2] = -B(jmax) / ((jmax + 1) * A(jmax));
        for (int k = n - 2; k > lo; --k) {
            int j = jmin + k;
            bw[k - 1] = -(B(j) * bw[k] + j * A(j + 1) * bw[k + 1]) / ((j + 1) * A(j));
            if (std::abs(bw[k - 1]) > 1e200)
                for (int q = k - 1; q < n; ++q) bw[q] *= 1e-200;
        }
        double num = 0, den = 0;
        for (int k = lo; k <= std::min(lo + 1, n - 1); ++k) {
            num += fw[k] * bw[k];
            den += bw[k] * bw[k];
        }
        double lam = num / den;
        for (int k = 0; k < n; ++k) f[k] = (k <= jf) ? fw[k] : lam * bw[k];
    }
    double norm = 0;
    for (int k = 0; k < n; ++k) norm += (2.0 * (jmin + k) + 1.0) * f[k] * f[k];
    double sign = ((j2 - j3 - m1) % 2 != 0) ? -1.0 : 1.0;
    double scale = 1.0 / std::sqrt(norm);
    if ((f[n - 1] < 0) != (sign < 0)) scale = -scale;
    for (auto& v : f) v *= scale;
}

inline ThreeJ wigner3j_range(int j2, int j3, int m2, int m3) {
    ThreeJ t;
    wigner3j_range(j2, j3, m2, m3, t);
    return t;
}

inline double wigner3j(int l1, int l2, int l3, int m1, int m2, int m3) {
    if (m1 + m2 + m3 != 0) return 0.0;
    if (l1 < 0 || l2 < 0 || l3 < 0) throw InvalidArgument("wigner3j: negative degree");
    if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) return 0.0;
    if (l1 < std::abs(l2 - l3) || l1 > l2 + l3) return 0.0;
    return wigner3j_range(l2, l3, m2, m3).at(l1);
}

// integral of Y_{l1m1} Y_{l2m2} Y_{l3m3} over the normalized measure
inline double gaunt(int l1, int m1, int l2, int m2, int l3, int m3) {
    if (m1 + m2 + m3 != 0 || (l1 + l2 + l3) % 2 != 0) return 0.0;
    if (l3 < std::abs(l1 - l2) || l3 > l1 + l2) return 0.0;
    if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) return 0.0;
    return std::sqrt((2.0 * l1 + 1) * (2.0 * l2 + 1) * (2.0 * l3 + 1)) * wigner3j(l1, l2, l3, 0, 0, 0) *
           wigner3j(l1, l2, l3, m1, m2, m3);
}

// ---------------------------------------------------------------------------
// Wigner D: c' = D c represents xi -> phi(R^{-1} xi)

struct EulerZYZ {
    double alpha, beta, gamma;
};

inline EulerZYZ euler_zyz(const Rotation& rot) {
    if (rot.dim() != 3) throw DimensionMismatch("euler_zyz needs d = 3");
    const Mat& R = rot.matrix();
    EulerZYZ e;
    e.beta = std::atan2(std::hypot(R(0, 2), R(1, 2)), R(2, 2));
    e.alpha = std::atan2(R(1, 2), R(0, 2));
    if (e.beta <= std::numbers::pi / 2) {
        double sum = std::atan2(R(1, 0) - R(0, 1), R(0, 0) + R(1, 1));
        e.gamma = sum - e.alpha;
    } else {
        double diff = std::atan2(-(R(1, 0) + R(0, 1)), R(1, 1) - R(0, 0));
        e.gamma = e.alpha - diff;
    }
    return e;
}

namespace detail {
struct JyEigen {
    CMat V;
    Eigen::VectorXd mu;
};

inline const JyEigen& jy_eigen(int l) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<JyEigen>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[l];
    if (!slot) {
        int n = 2 * l + 1;
        CMat jy = CMat::Zero(n, n);
        for (int m = -l; m < l; ++m) {
            double c = std::sqrt(double(l) * (l + 1) - double(m) * (m + 1)) / 2.0;
            // <m+1|Jy|m> = -i c, <m|Jy|m+1> = i c
            jy(m + 1 + l, m + l) = cplx(0, -c);
            jy(m + l, m + 1 + l) = cplx(0, c);
        }
        Eigen::SelfAdjointEigenSolver<CMat> es(jy);
        slot = std::make_unique<JyEigen>();
        slot->V = es.eigenvectors();
        slot->mu = es.eigenvalues().array().round().matrix();
    }
    return *slot;
}
}  // namespace detail

// small d^l(beta), real
inline Mat wigner_small_d(int l, double beta) {
    const auto& e = detail::jy_eigen(l);
    CVec ph(e.mu.size());
    for (Eigen::Index k = 0; k < e.mu.size(); ++k) ph(k) = std::polar(1.0, -beta * e.mu(k));
    CMat d = e.V * ph.asDiagonal() * e.V.adjoint();
    return d.real();
}

inline CMat wigner_D(int l, const Rotation& rot) {
    if (l < 0 || l > kWignerCap) throw CapExceeded("wigner_D: degree " + std::to_string(l) + " above cap");
    auto e = euler_zyz(rot);
    Mat d = wigner_small_d(l, e.beta);
    CMat D(2 * l + 1, 2 * l + 1);
    for (int mp = -l; mp <= l; ++mp)
        for (int m = -l; m <= l; ++m)
            D(mp + l, m + l) = std::polar(1.0, -mp * e.alpha - m * e.gamma) * d(mp + l, m + l);
    return D;
}

inline BandFunction rotate_band(const BandFunction& f, const Rotation& rot) {
    BandFunction out(f.lmax);
    for (int l = 0; l <= f.lmax; ++l) {
        CMat D = wigner_D(l, rot);
        out.coeffs.segment(l * l, 2 * l + 1) = D * f.coeffs.segment(l * l, 2 * l + 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// plane waves omega(xi) = e^{-2 pi i r <xi, v>}

inline BandFunction plane_wave_coeffs(double r, const Eigen::Vector3d& v, int lmax) {
    if (r < 0) throw InvalidArgument("plane_wave_coeffs: r must be >= 0");
    BandFunction f(lmax);
    double x = 2.0 * std::numbers::pi * r * v.norm();
    if (x == 0) {
        f.coeffs(0) = 1.0;
        return f;
    }
    auto j = bessel_j_array(lmax, x);
    CVec y = sph_harm_all(lmax, v.normalized());
    const cplx mi[4] = {1.0, cplx(0, -1), -1.0, cplx(0, 1)};
    for (int l = 0; l <= lmax; ++l)
        for (int m = -l; m <= l; ++m) f.coeffs(lm_index(l, m)) = mi[l % 4] * j[l] * std::conj(y(lm_index(l, m)));
    return f;
}

// 2 x^k / k!
inline double taylor_tail_bound(double x, int k) {
    if (x == 0) return k == 0 ? 2.0 : 0.0;
    return 2.0 * std::exp(k * std::log(x) - std::lgamma(k + 1.0));
}

// sum_{l >= k} (2l+1)|j_l(x)|, which bounds the sup norm of the degree >= k part
inline double bessel_tail_sum(double x, int k) {
    if (x == 0) return k == 0 ? 1.0 : 0.0;
    int top = std::max(k, static_cast<int>(std::ceil(2.0 * x))) + 40;
    auto j = bessel_j_array(top + 1, x);
    double s = 0;
    for (int l = k; l <= top; ++l) s += (2.0 * l + 1.0) * std::abs(j[l]);
    // beyond top, |j_{l+1}/j_l| <= x/(2l+3) < 1/2, (2l+1) grows slower than 2^l
    s += 4.0 * (2.0 * top + 3.0) * std::abs(j[top + 1]);
    return s;
}

// sup-norm of the part of omega not captured by degrees < k
inline double sup_tail_bound(double x, int k) {
    if (k <= 0) return 1.0;
    return std::min({1.0, taylor_tail_bound(x, k), bessel_tail_sum(x, k)});
}

// ---------------------------------------------------------------------------
// Littlewood-Paley bookkeeping

inline long long binom(long long n, long long k) {
    if (k < 0 || n < k) return 0;
    long long r = 1;
    for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline long long dim_H(int d, int j) {
    if (d < 2 || j < 0) throw InvalidArgument("dim_H: need d >= 2 and j >= 0");
    return binom(d + j - 1, d - 1) - binom(d + j - 3, d - 1);
}

// floor(log2(100 r sqrt(L))) + 1, at least 1
inline int n0(double r, int L) {
    if (!(r > 0) || L < 1) throw InvalidArgument("n0: need r > 0 and L >= 1");
    double x = 100.0 * r * std::sqrt(double(L));
    int e = static_cast<int>(std::floor(std::log2(x)));
    // guard log2 rounding at exact powers of two
    if (std::ldexp(1.0, e + 1) <= x) ++e;
    if (std::ldexp(1.0, e) > x) --e;
    return std::max(1, e + 1);
}

struct BlockSpec {
    int n0 = 1;
    int lmax = 0;
    // [lo, hi] inclusive degree range of block i
    std::vector<std::pair<int, int>> ranges;
};

inline BlockSpec block_spec_from_n0(int n0v, int lmax) {
    if (n0v < 1) throw InvalidArgument("block_spec: n0 must be >= 1");
    BlockSpec b;
    b.n0 = n0v;
    b.lmax = lmax;
    int hi = std::min(lmax, 1 << std::min(n0v, 30));
    b.ranges.emplace_back(0, hi);
    for (int i = 1; hi < lmax; ++i) {
        int lo = hi + 1;
        hi = std::min(lmax, 1 << std::min(n0v + i, 30));
        b.ranges.emplace_back(lo, hi);
    }
    return b;
}

inline BlockSpec block_spec(double r, int L, int lmax) { return block_spec_from_n0(n0(r, L), lmax); }

inline std::vector<BandFunction> project_blocks(const BandFunction& f, const BlockSpec& spec) {
    if (spec.lmax < f.lmax) throw InvalidArgument("project_blocks: spec does not cover the band");
    std::vector<BandFunction> out;
    for (auto [lo, hi] : spec.ranges) {
        BandFunction b(f.lmax);
        for (int l = lo; l <= std::min(hi, f.lmax); ++l)
            b.coeffs.segment(l * l, 2 * l + 1) = f.coeffs.segment(l * l, 2 * l + 1);
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace isomlab
