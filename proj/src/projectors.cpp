#include "dirac_forge/projectors.hpp"

#include "dirac_forge/errors.hpp"

#include <cmath>

namespace dirac_forge {

bool ResidualReport::ok() const
{
    for (const auto& [name, e] : entries)
        if (!e.pass) return false;
    return true;
}

namespace {

std::string idx(const char* stem, std::size_t k)
{
    return stem + std::to_string(k);
}

long tail_alternating(const std::vector<std::size_t>& m, std::size_t k)
{
    long s = 0, sign = 1;
    for (std::size_t i = k; i < m.size(); ++i) {
        s += sign * static_cast<long>(m[i]);
        sign = -sign;
    }
    return s;
}

}  // namespace

ResidualReport verify_ladder(const ReducibleSystem& sys, const ProjectorLadder& lad, const std::vector<Vec>& points)
{
    const std::size_t L = lad.order;
    const double tw = sys.tol.tol_weak;
    const auto m = sys.level_sizes();
    if (lad.abar.size() != L || lad.d.size() != std::max<std::size_t>(L, 1) || lad.z.size() != L)
        throw StructuralError("ladder does not match the system order");
    ResidualReport rep;
    auto put = [&](const std::string& name, double r, double thr) {
        rep.entries[name] = {r, thr, std::isfinite(r) && r < thr};
    };

    std::vector<Mat> d(std::max<std::size_t>(L, 1));
    if (L == 0) d[0] = Mat::Identity(static_cast<Eigen::Index>(m[0]), static_cast<Eigen::Index>(m[0]));
    for (std::size_t k = 0; k < L; ++k) {
        auto n = static_cast<Eigen::Index>(m[k]);
        d[k] = Mat::Identity(n, n) - lad.abar[k] * lad.z[k];
    }
    for (std::size_t k = 0; k < d.size(); ++k) {
        put(idx("stored_d", k), max_abs(lad.d[k] - d[k]), tw);
        put(idx("d", k) + "_idempotent", max_abs(d[k] * d[k] - d[k]), tw);
        long expect = tail_alternating(m, k);
        long got = static_cast<long>(numerical_rank(d[k], sys.tol.tol_rank));
        put(idx("rank_d", k), static_cast<double>(std::labs(got - expect)), 0.5);
    }
    for (std::size_t k = 1; k <= L; ++k) {
        const Mat& zk = lad.z[k - 1];
        const Mat& ak = lad.abar[k - 1];
        if (k < L) {
            put(idx("z", k) + idx("_abar", k), max_abs(zk * ak - d[k]), tw);
            put(idx("d", k) + idx("_z", k), max_abs(d[k] * zk - zk), tw);
            put(idx("abar", k) + idx("_abar", k + 1), max_abs(ak * lad.abar[k]), tw);
            put(idx("abar", k) + idx("_d", k), max_abs(ak * d[k] - ak), tw);
        } else {
            auto n = static_cast<Eigen::Index>(m[k]);
            put(idx("z", k) + idx("_abar", k), max_abs(zk * ak - Mat::Identity(n, n)), tw);
        }
        put(idx("z", k) + idx("_d", k - 1), max_abs(zk * d[k - 1]), tw);
        put(idx("d", k - 1) + idx("_abar", k), max_abs(d[k - 1] * ak), tw);
    }
    put("trace_d0", std::abs(d[0].trace() - static_cast<double>(sys.independent_count())), 1e-6);
    if (!points.empty()) {
        double worst = 0.0;
        for (const auto& z : points) {
            Vec c(static_cast<Eigen::Index>(sys.chi.size()));
            for (std::size_t a = 0; a < sys.chi.size(); ++a) c(static_cast<Eigen::Index>(a)) = sys.chi[a].evaluate(z);
            worst = std::max(worst, c.size() ? (d[0] * c - c).cwiseAbs().maxCoeff() : 0.0);
        }
        put("d0_chi", worst, tw);
    }
    return rep;
}

ProjectorLadder build_ladder(const ReducibleSystem& sys)
{
    sys.check_shapes();
    const std::size_t L = sys.order();
    const double tr = sys.tol.tol_rank;
    const auto m = sys.level_sizes();
    ProjectorLadder lad;
    lad.order = L;
    for (const auto& z : sys.z_stages) lad.z.push_back(z.to_double());
    if (L == 0) {
        auto n = static_cast<Eigen::Index>(m[0]);
        lad.d.push_back(Mat::Identity(n, n));
    } else {
        const Mat& zl = lad.z.back();
        lad.a_top = zl.transpose();
        lad.d_top = zl * lad.a_top;
        if (numerical_rank(lad.d_top, tr) != m[L]) {
            throw LadderError("top stage is not of full row rank", {{"top_rank_deficit",
                static_cast<double>(m[L] - numerical_rank(lad.d_top, tr))}});
        }
        lad.d_top_inv = lad.d_top.fullPivLu().inverse();
        lad.abar.assign(L, Mat());
        lad.d.assign(L, Mat());
        lad.abar[L - 1] = lad.a_top * lad.d_top_inv;
        for (std::size_t k = L; k-- > 0;) {
            auto n = static_cast<Eigen::Index>(m[k]);
            lad.d[k] = Mat::Identity(n, n) - lad.abar[k] * lad.z[k];
            if (k == 0) break;
            // Abar_k from the pseudo-inverse of Z_k restricted by D_k
            Mat a = pinv(lad.z[k - 1], tr) * lad.d[k];
            Mat r = a * lad.abar[k];
            if (max_abs(r) > 0.0) {
                if (k >= 2) {
                    // shift along range(Z_{k-1}) which keeps Z_k Abar_k unchanged
                    Mat mu = -pinv(lad.z[k - 2], tr) * r * pinv(lad.abar[k], tr);
                    a += lad.z[k - 2] * mu;
                } else {
                    a = a * (Mat::Identity(n, n) - lad.abar[k] * pinv(lad.abar[k], tr));
                }
            }
            lad.abar[k - 1] = a;
        }
    }
    ResidualReport rep = verify_ladder(sys, lad);
    std::map<std::string, double> res;
    bool ok = true;
    for (const auto& [name, e] : rep.entries) {
        res[name] = e.residual;
        ok = ok && e.pass;
    }
    lad.residuals = res;
    if (!ok) throw LadderError("projector ladder identities fail beyond tolerance", res);
    return lad;
}

}  // namespace dirac_forge
