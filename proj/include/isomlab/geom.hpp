#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace isomlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline void check_dims(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b)
        throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                                std::to_string(b));
}

inline Mat polar_project(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

class Rotation {
public:
    Rotation() : m_(Mat::Identity(3, 3)) {}
    explicit Rotation(int d) : m_(Mat::Identity(d, d)) {}

    // validates orthonormality and orientation; tol applies to both
    static Rotation from_matrix(const Mat& m, double tol = 1e-12) {
        if (m.rows() != m.cols()) throw DimensionMismatch("rotation matrix must be square");
        const auto d = m.rows();
        double orth = (m.transpose() * m - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
        if (orth > tol) throw InvalidArgument("rotation matrix not orthonormal (error " + std::to_string(orth) + ")");
        if (std::abs(m.determinant() - 1.0) > tol) throw InvalidArgument("rotation matrix has det != +1");
        Rotation r;
        r.m_ = m;
        return r;
    }

    // trusted constructor, re-orthonormalizes
    static Rotation projected(const Mat& m) {
        Rotation r;
        r.m_ = polar_project(m);
        if (r.m_.determinant() < 0) throw InvalidArgument("matrix is orientation reversing");
        return r;
    }

    static Rotation axis_angle(const Eigen::Vector3d& axis, double angle) {
        double n = axis.norm();
        if (n == 0) throw InvalidArgument("rotation axis is zero");
        Rotation r;
        r.m_ = Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
        return r;
    }
    static Rotation rx(double a) { return axis_angle(Eigen::Vector3d::UnitX(), a); }
    static Rotation ry(double a) { return axis_angle(Eigen::Vector3d::UnitY(), a); }
    static Rotation rz(double a) { return axis_angle(Eigen::Vector3d::UnitZ(), a); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Mat& matrix() const { return m_; }
    int depth() const { return depth_; }

    Rotation transpose() const {
        Rotation r;
        r.m_ = m_.transpose();
        r.depth_ = depth_;
        return r;
    }

    friend Rotation operator*(const Rotation& a, const Rotation& b) {
        check_dims(a.dim(), b.dim(), "rotation product");
        Rotation r;
        r.m_ = a.m_ * b.m_;
        r.depth_ = a.depth_ + b.depth_ + 1;
        if (r.depth_ >= 64) {
            r.m_ = polar_project(r.m_);
            r.depth_ = 0;
        }
        return r;
    }

    Vec operator*(const Vec& x) const {
        check_dims(dim(), x.size(), "rotation apply");
        return m_ * x;
    }

private:
    Mat m_;
    int depth_ = 0;
};

struct Isometry {
    Vec v;
    Rotation rot;

    Isometry() : v(Vec::Zero(3)), rot(3) {}
    Isometry(Vec v_, Rotation r_) : v(std::move(v_)), rot(std::move(r_)) {
        check_dims(v.size(), rot.dim(), "isometry");
    }
    static Isometry identity(int d) { return Isometry(Vec::Zero(d), Rotation(d)); }
    static Isometry translation(const Vec& v) { return Isometry(v, Rotation(static_cast<int>(v.size()))); }
    int dim() const { return static_cast<int>(v.size()); }
};

struct Similarity {
    double lambda = 1.0;
    Rotation rot;
    Vec v;

    Similarity() : rot(3), v(Vec::Zero(3)) {}
    Similarity(double l, Rotation r, Vec v_) : lambda(l), rot(std::move(r)), v(std::move(v_)) {
        check_dims(v.size(), rot.dim(), "similarity");
        if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("similarity ratio must lie in (0,1]");
    }
    int dim() const { return static_cast<int>(v.size()); }
};

inline Isometry compose(const Isometry& a, const Isometry& b) {
    check_dims(a.dim(), b.dim(), "compose");
    return Isometry(a.v + a.rot.matrix() * b.v, a.rot * b.rot);
}

inline Similarity compose(const Similarity& a, const Similarity& b) {
    check_dims(a.dim(), b.dim(), "compose");
    return Similarity(a.lambda * b.lambda, a.rot * b.rot, a.v + a.lambda * (a.rot.matrix() * b.v));
}

inline Rotation compose(const Rotation& a, const Rotation& b) { return a * b; }

inline Isometry inverse(const Isometry& g) {
    Rotation ti = g.rot.transpose();
    return Isometry(-(ti.matrix() * g.v), ti);
}

inline Rotation inverse(const Rotation& r) { return r.transpose(); }

inline Vec apply(const Isometry& g, const Vec& x) {
    check_dims(g.dim(), x.size(), "apply");
    return g.v + g.rot.matrix() * x;
}

inline Vec apply_similarity(const Similarity& k, const Vec& x) {
    check_dims(k.dim(), x.size(), "apply_similarity");
    return k.v + k.lambda * (k.rot.matrix() * x);
}

inline Vec fixed_point(const Similarity& k) {
    const int d = k.dim();
    Mat a = Mat::Identity(d, d) - k.lambda * k.rot.matrix();
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) throw NearSingular("similarity has no unique fixed point");
    return lu.solve(k.v);
}

// the lambda -> 1 projection g(kappa)
inline Isometry to_isometry(const Similarity& k) { return Isometry(k.v, k.rot); }

inline double op_norm_real(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

// operator norm of R1 - R2; bi-invariant
inline double rotation_distance(const Rotation& a, const Rotation& b) {
    check_dims(a.dim(), b.dim(), "rotation_distance");
    return op_norm_real(a.matrix() - b.matrix());
}

inline Rotation haar_rotation(int d, Rng& rng) {
    if (d < 2) throw InvalidArgument("haar_rotation needs d >= 2");
    Mat g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = std_normal(rng);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    if (q.determinant() < 0) q.col(0) = -q.col(0);
    return Rotation::from_matrix(q, 1e-10);
}

// --- element traits used by DiscreteMeasure -------------------------------

// product metric: rotation_distance + translation distance (+ ratio difference)
inline double element_distance(const Isometry& a, const Isometry& b) {
    return (a.v - b.v).norm() + rotation_distance(a.rot, b.rot);
}
inline double element_distance(const Similarity& a, const Similarity& b) {
    return std::abs(a.lambda - b.lambda) + (a.v - b.v).norm() + rotation_distance(a.rot, b.rot);
}
inline double element_distance(const Rotation& a, const Rotation& b) { return rotation_distance(a, b); }
inline double element_distance(const Vec& a, const Vec& b) { return (a - b).norm(); }

namespace detail {
inline double key_coeff(int i) {
    // fixed generic functional; values in [0.5, 1.5)
    return 0.5 + std::fmod(0.6180339887498949 * (i + 1) + 0.1415926535, 1.0);
}
}  // namespace detail

inline double merge_key(const Vec& x) {
    double k = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) k += detail::key_coeff(static_cast<int>(i)) * x(i);
    return k;
}
inline double merge_key(const Rotation& r) {
    double k = 0;
    const Mat& m = r.matrix();
    for (Eigen::Index i = 0; i < m.size(); ++i) k += detail::key_coeff(static_cast<int>(i) + 17) * m.data()[i];
    return k;
}
inline double merge_key(const Isometry& g) { return merge_key(g.v) + merge_key(g.rot); }
inline double merge_key(const Similarity& k) { return merge_key(k.v) + merge_key(k.rot) + 1.3 * k.lambda; }

// |merge_key(a) - merge_key(b)| <= key_slack(d) * element_distance(a, b)
template <class T>
double key_slack(int d) {
    // |dv| coefficient sum <= 1.5 sqrt(d); rotation entries <= 1.5 d * ||dR||_F <= 1.5 d sqrt(d) ||dR||_op
    double s = 1.5 * std::sqrt(double(d)) + 1.5 * d * std::sqrt(double(d)) + 1.3;
    return s;
}

inline int element_dim(const Isometry& g) { return g.dim(); }
inline int element_dim(const Similarity& k) { return k.dim(); }
inline int element_dim(const Rotation& r) { return r.dim(); }
inline int element_dim(const Vec& x) { return static_cast<int>(x.size()); }

}  // namespace isomlab
