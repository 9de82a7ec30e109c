#include "ucc/cluster.hpp"

#include "ucc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ucc {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Matrix plusplus_seed(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t m = points.rows();
    Matrix centers(k, points.cols());
    std::uniform_int_distribution<std::size_t> first(0, m - 1);
    std::vector<double> d2(m, std::numeric_limits<double>::infinity());

    std::size_t idx = first(rng);
    for (std::size_t c = 0; c < k; ++c) {
        auto src = points.row(idx);
        std::copy(src.begin(), src.end(), centers.row(c).begin());
        if (c + 1 == k) break;
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            d2[i] = std::min(d2[i], sq_dist(points.row(i), centers.row(c)));
            total += d2[i];
        }
        if (total <= 0.0) {
            idx = first(rng);
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        double acc = 0.0;
        idx = m - 1;
        for (std::size_t i = 0; i < m; ++i) {
            acc += d2[i];
            if (acc >= target) {
                idx = i;
                break;
            }
        }
    }
    return centers;
}

ClusterAssignment lloyd(const Matrix& points, std::size_t k, std::size_t max_iters, double tol,
                        std::mt19937_64& rng) {
    const std::size_t m = points.rows();
    const std::size_t d = points.cols();
    Matrix centers = plusplus_seed(points, k, rng);
    std::vector<int> labels(m, 0);
    std::vector<std::size_t> counts(k);
    double prev = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < max_iters; ++it) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                double dist = sq_dist(points.row(i), centers.row(c));
                if (dist < best) {
                    best = dist;
                    arg = static_cast<int>(c);
                }
            }
            labels[i] = arg;
            inertia += best;
        }

        Matrix next(k, d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            auto dst = next.row(static_cast<std::size_t>(labels[i]));
            auto src = points.row(i);
            for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
            ++counts[static_cast<std::size_t>(labels[i])];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed an empty cluster to the point farthest from its center
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < m; ++i) {
                    double dist = sq_dist(points.row(i),
                                          centers.row(static_cast<std::size_t>(labels[i])));
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                auto src = points.row(far);
                std::copy(src.begin(), src.end(), next.row(c).begin());
            } else {
                auto dst = next.row(c);
                double inv = 1.0 / static_cast<double>(counts[c]);
                for (std::size_t col = 0; col < d; ++col) dst[col] *= inv;
            }
        }
        centers = std::move(next);
        if (prev - inertia <= tol * std::max(1.0, prev) && it > 0) {
            prev = inertia;
            break;
        }
        prev = inertia;
    }

    // final assignment against the converged centers
    double inertia = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double dist = sq_dist(points.row(i), centers.row(c));
            if (dist < best) {
                best = dist;
                arg = static_cast<int>(c);
            }
        }
        labels[i] = arg;
        inertia += best;
    }
    return {std::move(labels), k, inertia};
}

}  // namespace

ClusterAssignment kmeans(const Matrix& points, std::size_t k, std::size_t restarts,
                         std::size_t max_iters, double tol, std::mt19937_64& rng) {
    if (k == 0) throw ContractError("kmeans needs k >= 1");
    if (points.rows() < k) throw ContractError("kmeans needs at least k points");
    if (restarts == 0 || max_iters == 0) throw ContractError("restarts and max_iters must be positive");
    if (!all_finite(points)) throw NumericError("kmeans input contains non-finite values");

    ClusterAssignment best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        ClusterAssignment cand = lloyd(points, k, max_iters, tol, rng);
        if (cand.inertia < best.inertia) best = std::move(cand);
    }
    return best;
}

std::pair<std::vector<double>, Matrix> jacobi_eigh(const Matrix& sym, std::size_t max_sweeps) {
    const std::size_t n = sym.rows();
    if (sym.cols() != n) throw ShapeError("jacobi_eigh needs a square matrix");
    Matrix a = sym;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-22) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    std::vector<double> evals(n);
    Matrix evecs(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        evals[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) evecs(r, c) = v(r, order[c]);
    }
    return {std::move(evals), std::move(evecs)};
}

ClusterAssignment spectral(const Matrix& points, std::size_t k, double scale,
                           std::mt19937_64& rng, std::size_t max_points) {
    const std::size_t m = points.rows();
    if (k == 0) throw ContractError("spectral needs k >= 1");
    if (m < k) throw ContractError("spectral needs at least k points");
    if (m > max_points) throw ContractError("spectral input exceeds the dense-solver cap");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ContractError("spectral scale must be positive");
    if (!all_finite(points)) throw NumericError("spectral input contains non-finite values");

    Matrix w(m, m);
    const double denom = 2.0 * scale * scale;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            double a = std::exp(-sq_dist(points.row(i), points.row(j)) / denom);
            w(i, j) = a;
            w(j, i) = a;
        }
    }

    std::vector<double> dinv(m);
    for (std::size_t i = 0; i < m; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < m; ++j) deg += w(i, j);
        dinv[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }

    Matrix lap(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            lap(i, j) = (i == j ? 1.0 : 0.0) - dinv[i] * w(i, j) * dinv[j];
    }

    auto [evals, evecs] = jacobi_eigh(lap);
    (void)evals;

    Matrix embed(m, k);
    for (std::size_t i = 0; i < m; ++i) {
        double norm = 0.0;
        for (std::size_t c = 0; c < k; ++c) norm += evecs(i, c) * evecs(i, c);
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < k; ++c)
            embed(i, c) = norm > 0.0 ? evecs(i, c) / norm : 0.0;
    }

    return kmeans(embed, k, 5, 100, 1e-10, rng);
}

double clustering_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size())
        throw ShapeError("clustering_accuracy needs equal-length label vectors");
    if (truth.empty()) throw ContractError("clustering_accuracy on empty labels");

    std::map<int, std::size_t> tmap, pmap;
    for (int t : truth)
        if (!tmap.count(t)) {
            std::size_t id = tmap.size();
            tmap[t] = id;
        }
    for (int p : predicted)
        if (!pmap.count(p)) {
            std::size_t id = pmap.size();
            pmap[p] = id;
        }

    const std::size_t n = std::max(tmap.size(), pmap.size());
    Matrix overlap(n, n);
    for (std::size_t i = 0; i < truth.size(); ++i)
        overlap(pmap[predicted[i]], tmap[truth[i]]) += 1.0;

    // Hungarian assignment (potentials form) on negated overlaps.
    const std::size_t rows = n, cols = n;
    std::vector<double> u(rows + 1), v(cols + 1);
    std::vector<std::size_t> match(cols + 1, 0);
    std::vector<std::size_t> way(cols + 1, 0);
    const double inf = std::numeric_limits<double>::infinity();

    for (std::size_t i = 1; i <= rows; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(cols + 1, inf);
        std::vector<char> used(cols + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = match[j0], j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                double cur = -overlap(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    double matched = 0.0;
    for (std::size_t j = 1; j <= cols; ++j)
        if (match[j] != 0) matched += overlap(match[j] - 1, j - 1);
    return matched / static_cast<double>(truth.size());
}

JsMatrix interclass_js(const std::vector<Matrix>& dists) {
    const std::size_t kc = dists.size();
    if (kc < 2) throw ContractError("interclass_js needs at least two classes");
    const std::size_t j_dim = dists[0].rows();
    const std::size_t bins = dists[0].cols();
    for (const Matrix& d : dists)
        if (d.rows() != j_dim || d.cols() != bins)
            throw ShapeError("interclass_js distributions must share a shape");

    auto xlogx = [](double p, double q) { return p > 0.0 ? p * std::log(p / q) : 0.0; };

    JsMatrix out{Matrix(kc, kc), std::numeric_limits<double>::infinity()};
    for (std::size_t a = 0; a < kc; ++a) {
        for (std::size_t b = a + 1; b < kc; ++b) {
            double js = 0.0;
            for (std::size_t j = 0; j < j_dim; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < bins; ++t) {
                    double p = dists[a](j, t), q = dists[b](j, t);
                    double m = 0.5 * (p + q);
                    if (m > 0.0) acc += 0.5 * xlogx(p, m) + 0.5 * xlogx(q, m);
                }
                js += acc;
            }
            js /= static_cast<double>(j_dim);
            out.values(a, b) = js;
            out.values(b, a) = js;
            out.min_off_diagonal = std::min(out.min_off_diagonal, js);
        }
    }
    return out;
}

}  // namespace ucc
