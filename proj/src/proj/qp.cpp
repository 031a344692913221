#include "lirl/proj/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lirl {

namespace {

constexpr double kFeasTol = 1e-12;  // violation below this counts as feasible
constexpr double kZeroDir = 1e-14;  // ||z||^2 below this means dependent normal

// Constraint rows G x <= h, dense.
struct Rows {
    int dim = 0;
    std::vector<std::vector<double>> G;
    std::vector<double> h;
};

Rows build_rows(const Region& r) {
    Rows rows;
    rows.dim = r.dim;
    for (int i = 0; i < r.dim; ++i) {
        std::vector<double> g(r.dim, 0.0);
        g[i] = -1.0;
        rows.G.push_back(std::move(g));
        rows.h.push_back(-r.lower[i]);
    }
    for (int i = 0; i < r.dim; ++i) {
        std::vector<double> g(r.dim, 0.0);
        g[i] = 1.0;
        rows.G.push_back(std::move(g));
        rows.h.push_back(r.upper[i]);
    }
    for (size_t j = 0; j < r.A.size(); ++j) {
        rows.G.push_back(r.A[j]);
        rows.h.push_back(r.b[j]);
    }
    return rows;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Solve S y = rhs for SPD S via Cholesky, in place. Returns false if S is
// numerically singular.
bool spd_solve(std::vector<std::vector<double>> S, std::vector<double>& y) {
    const int m = static_cast<int>(S.size());
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < i; ++k) S[i][i] -= S[i][k] * S[i][k];
        if (S[i][i] < 1e-14) return false;
        S[i][i] = std::sqrt(S[i][i]);
        for (int j = i + 1; j < m; ++j) {
            for (int k = 0; k < i; ++k) S[j][i] -= S[j][k] * S[i][k];
            S[j][i] /= S[i][i];
        }
    }
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < i; ++k) y[i] -= S[i][k] * y[k];
        y[i] /= S[i][i];
    }
    for (int i = m - 1; i >= 0; --i) {
        for (int k = i + 1; k < m; ++k) y[i] -= S[k][i] * y[k];
        y[i] /= S[i][i];
    }
    return true;
}

double kkt_residual(const Rows& rows, const std::vector<double>& v,
                    const std::vector<double>& x, const std::vector<double>& duals) {
    const int d = rows.dim;
    const int m = static_cast<int>(rows.G.size());
    std::vector<double> stat(d);
    for (int i = 0; i < d; ++i) stat[i] = x[i] - v[i];
    double res = 0.0;
    for (int j = 0; j < m; ++j) {
        const double slack = dot(rows.G[j], x) - rows.h[j];
        res = std::max(res, slack);                     // primal feasibility
        res = std::max(res, -duals[j]);                 // dual feasibility
        res = std::max(res, std::abs(duals[j] * slack));  // complementarity
        for (int i = 0; i < d; ++i) stat[i] += duals[j] * rows.G[j][i];
    }
    for (int i = 0; i < d; ++i) res = std::max(res, std::abs(stat[i]));  // stationarity
    return res;
}

QpSolution active_set_solve(const Rows& rows, const std::vector<double>& v, int max_iters) {
    const int d = rows.dim;
    const int m = static_cast<int>(rows.G.size());
    std::vector<double> x = v;
    std::vector<int> active;
    std::vector<double> lambda;
    int iters = 0;

    auto most_violated = [&]() -> std::pair<int, double> {
        int p = -1;
        double worst = kFeasTol;
        for (int j = 0; j < m; ++j) {
            const double s = dot(rows.G[j], x) - rows.h[j];
            if (s > worst) {
                worst = s;
                p = j;
            }
        }
        return {p, worst};
    };

    while (true) {
        auto [p, viol] = most_violated();
        if (p < 0) break;
        double lam_p = 0.0;
        // bring row p into the working set, taking partial dual steps that
        // drop blocking constraints along the way
        while (true) {
            if (++iters > max_iters) {
                std::vector<double> duals(m, 0.0);
                for (size_t j = 0; j < active.size(); ++j) duals[active[j]] = lambda[j];
                throw QpError("projection QP exceeded max iterations",
                              kkt_residual(rows, v, x, duals), iters);
            }
            const int na = static_cast<int>(active.size());
            // r = (N^T N)^{-1} N^T g_p ; z = g_p - N r
            std::vector<double> r(na, 0.0);
            if (na > 0) {
                std::vector<std::vector<double>> S(na, std::vector<double>(na));
                for (int a = 0; a < na; ++a) {
                    r[a] = dot(rows.G[active[a]], rows.G[p]);
                    for (int c = 0; c <= a; ++c)
                        S[a][c] = S[c][a] = dot(rows.G[active[a]], rows.G[active[c]]);
                }
                if (!spd_solve(std::move(S), r))
                    throw QpError("projection QP: degenerate active set", viol, iters);
            }
            std::vector<double> z = rows.G[p];
            for (int a = 0; a < na; ++a)
                for (int i = 0; i < d; ++i) z[i] -= r[a] * rows.G[active[a]][i];
            const double zz = dot(z, z);

            double t1 = std::numeric_limits<double>::infinity();
            int drop = -1;
            for (int a = 0; a < na; ++a)
                if (r[a] > 1e-14 && lambda[a] / r[a] < t1) {
                    t1 = lambda[a] / r[a];
                    drop = a;
                }

            if (zz > kZeroDir) {
                const double s_p = dot(rows.G[p], x) - rows.h[p];
                if (s_p <= kFeasTol) break;  // satisfied during partial steps
                const double t2 = s_p / zz;
                const double t = std::min(t1, t2);
                for (int i = 0; i < d; ++i) x[i] -= t * z[i];
                for (int a = 0; a < na; ++a) lambda[a] -= t * r[a];
                lam_p += t;
                if (t2 <= t1) {
                    active.push_back(p);
                    lambda.push_back(lam_p);
                    break;
                }
            } else {
                // g_p lies in the span of the active normals; only a dual
                // step is possible
                if (drop < 0)
                    throw QpError("projection QP: infeasible region", viol, iters);
                for (int a = 0; a < na; ++a) lambda[a] -= t1 * r[a];
                lam_p += t1;
            }
            active.erase(active.begin() + drop);
            lambda.erase(lambda.begin() + drop);
        }
    }

    QpSolution sol;
    sol.x = std::move(x);
    sol.duals.assign(m, 0.0);
    for (size_t j = 0; j < active.size(); ++j)
        sol.duals[active[j]] = std::max(0.0, lambda[j]);
    sol.iterations = iters;
    sol.kkt_residual = kkt_residual(rows, v, sol.x, sol.duals);
    return sol;
}

QpSolution admm_solve(const Rows& rows, const std::vector<double>& v, int max_iters) {
    const int d = rows.dim;
    const int m = static_cast<int>(rows.G.size());
    const double rho = 1.0;

    // factor M = I + rho G^T G once
    std::vector<std::vector<double>> M(d, std::vector<double>(d, 0.0));
    for (int i = 0; i < d; ++i) M[i][i] = 1.0;
    for (int j = 0; j < m; ++j)
        for (int a = 0; a < d; ++a)
            for (int c = 0; c < d; ++c) M[a][c] += rho * rows.G[j][a] * rows.G[j][c];

    std::vector<double> x = v, s(m, 0.0), u(m, 0.0), gx(m, 0.0);
    double best_res = std::numeric_limits<double>::infinity();
    int iters = 0;
    for (; iters < max_iters; ++iters) {
        std::vector<double> rhs = v;
        for (int j = 0; j < m; ++j) {
            const double w = rho * (rows.h[j] - s[j] - u[j]);
            for (int i = 0; i < d; ++i) rhs[i] += w * rows.G[j][i];
        }
        if (!spd_solve(M, rhs))
            throw QpError("projection QP: ADMM factorization failed", best_res, iters);
        x = std::move(rhs);
        double prim = 0.0, dualch = 0.0;
        for (int j = 0; j < m; ++j) {
            gx[j] = dot(rows.G[j], x);
            const double s_new = std::max(0.0, rows.h[j] - gx[j] - u[j]);
            dualch = std::max(dualch, std::abs(s_new - s[j]));
            s[j] = s_new;
            const double res = gx[j] + s[j] - rows.h[j];
            u[j] += res;
            prim = std::max(prim, std::abs(res));
        }
        best_res = std::min(best_res, prim);
        if (prim < 1e-10 && dualch < 1e-10) break;
    }
    if (iters >= max_iters)
        throw QpError("projection QP: ADMM exceeded max iterations", best_res, iters);

    // polish: re-solve exactly on the active set detected by ADMM
    std::vector<int> act;
    for (int j = 0; j < m; ++j)
        if (s[j] < 1e-8 && rho * u[j] > 1e-10) act.push_back(j);
    QpSolution sol;
    sol.x = x;
    sol.duals.assign(m, 0.0);
    const int na = static_cast<int>(act.size());
    if (na > 0) {
        std::vector<std::vector<double>> S(na, std::vector<double>(na));
        std::vector<double> lam(na);
        for (int a = 0; a < na; ++a) {
            lam[a] = dot(rows.G[act[a]], v) - rows.h[act[a]];
            for (int c = 0; c <= a; ++c)
                S[a][c] = S[c][a] = dot(rows.G[act[a]], rows.G[act[c]]);
        }
        if (spd_solve(S, lam)) {
            std::vector<double> xp = v;
            bool ok = true;
            for (int a = 0; a < na; ++a) {
                if (lam[a] < -1e-10) ok = false;
                for (int i = 0; i < d; ++i) xp[i] -= lam[a] * rows.G[act[a]][i];
            }
            for (int j = 0; j < m && ok; ++j)
                if (dot(rows.G[j], xp) - rows.h[j] > 1e-9) ok = false;
            if (ok) {
                sol.x = std::move(xp);
                for (int a = 0; a < na; ++a) sol.duals[act[a]] = std::max(0.0, lam[a]);
            }
        }
    }
    if (sol.duals == std::vector<double>(m, 0.0) && na > 0)
        for (int j = 0; j < m; ++j) sol.duals[j] = std::max(0.0, rho * u[j]);
    sol.iterations = iters;
    sol.kkt_residual = kkt_residual(rows, v, sol.x, sol.duals);
    return sol;
}

}  // namespace

QpSolution project_continuous(const std::vector<double>& v, const Region& region,
                              int max_iters) {
    if (static_cast<int>(v.size()) != region.dim)
        throw std::runtime_error("project_continuous: dimension mismatch");
    const Rows rows = build_rows(region);

    double worst = 0.0;
    for (size_t j = 0; j < rows.G.size(); ++j)
        worst = std::max(worst, dot(rows.G[j], v) - rows.h[j]);
    if (worst <= kFeasTol) {
        QpSolution sol;
        sol.x = v;  // exact fast path, no arithmetic on the input
        sol.duals.assign(rows.G.size(), 0.0);
        return sol;
    }

    if (static_cast<int>(rows.G.size()) > kAdmmRowThreshold)
        return admm_solve(rows, v, max_iters);
    return active_set_solve(rows, v, max_iters);
}

std::vector<double> find_interior_point(const Region& region) {
    std::vector<double> center(region.dim);
    for (int i = 0; i < region.dim; ++i) center[i] = 0.5 * (region.lower[i] + region.upper[i]);

    double span = 0.0;
    for (int i = 0; i < region.dim; ++i) span = std::max(span, region.upper[i] - region.lower[i]);
    double delta = std::min(1e-3, 0.25 * span);
    for (int attempt = 0; attempt < 4; ++attempt, delta *= 0.125) {
        Region shrunk = region;
        for (int i = 0; i < region.dim; ++i) {
            shrunk.lower[i] += delta;
            shrunk.upper[i] -= delta;
            if (shrunk.lower[i] > shrunk.upper[i]) {
                shrunk.lower[i] = shrunk.upper[i] = 0.5 * (region.lower[i] + region.upper[i]);
            }
        }
        for (auto& bb : shrunk.b) bb -= delta;
        try {
            QpSolution sol = project_continuous(center, shrunk);
            // verify strict interiority in the original region
            bool strict = true;
            for (int i = 0; i < region.dim; ++i)
                if (sol.x[i] <= region.lower[i] || sol.x[i] >= region.upper[i]) strict = false;
            for (size_t j = 0; j < region.A.size() && strict; ++j)
                if (dot(region.A[j], sol.x) >= region.b[j]) strict = false;
            if (strict) return sol.x;
        } catch (const QpError&) {
            // retry with a smaller shrink margin
        }
    }
    throw std::runtime_error("region admits no strictly interior point (Slater violated)");
}

}  // namespace lirl
