#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ucc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace ucc;

namespace {

Matrix blob_points(const std::vector<std::pair<double, double>>& centers, std::size_t per_blob,
                   double spread, std::mt19937_64& rng, std::vector<int>* truth = nullptr) {
    std::normal_distribution<double> n(0.0, spread);
    Matrix pts(centers.size() * per_blob, 2);
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (std::size_t i = 0; i < per_blob; ++i) {
            std::size_t r = c * per_blob + i;
            pts(r, 0) = centers[c].first + n(rng);
            pts(r, 1) = centers[c].second + n(rng);
            if (truth) truth->push_back(int(c) + 1);
        }
    return pts;
}

double brute_force_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
    std::vector<int> t_ids(truth), p_ids(predicted);
    std::sort(t_ids.begin(), t_ids.end());
    t_ids.erase(std::unique(t_ids.begin(), t_ids.end()), t_ids.end());
    std::sort(p_ids.begin(), p_ids.end());
    p_ids.erase(std::unique(p_ids.begin(), p_ids.end()), p_ids.end());

    std::size_t n = std::max(t_ids.size(), p_ids.size());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            std::size_t p_slot =
                std::size_t(std::find(p_ids.begin(), p_ids.end(), predicted[i]) - p_ids.begin());
            std::size_t t_slot = std::size_t(perm[p_slot]);
            if (t_slot < t_ids.size() && t_ids[t_slot] == truth[i]) ++hits;
        }
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return double(best) / double(truth.size());
}

}  // namespace

TEST_CASE("kmeans recovers well separated blobs exactly") {
    std::mt19937_64 rng(41);
    std::vector<int> truth;
    Matrix pts = blob_points({{0, 0}, {10, 0}, {0, 10}}, 40, 0.3, rng, &truth);
    ClusterAssignment a = kmeans(pts, 3, 5, 100, 1e-10, rng);
    REQUIRE(a.labels.size() == 120);
    CHECK(a.num_clusters == 3);
    CHECK(clustering_accuracy(truth, a.labels) == 1.0);
}

TEST_CASE("kmeans inertia matches a direct recomputation") {
    std::mt19937_64 rng(42);
    std::vector<int> truth;
    Matrix pts = blob_points({{0, 0}, {4, 4}}, 25, 0.5, rng, &truth);
    ClusterAssignment a = kmeans(pts, 2, 3, 100, 1e-10, rng);

    // recompute centers from the assignment, then the summed squared
    // distances must reproduce the reported inertia
    std::vector<double> cx(2, 0.0), cy(2, 0.0);
    std::vector<std::size_t> cnt(2, 0);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        std::size_t c = std::size_t(a.labels[i]);
        REQUIRE(c < 2);
        cx[c] += pts(i, 0);
        cy[c] += pts(i, 1);
        cnt[c]++;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        REQUIRE(cnt[c] > 0);
        cx[c] /= double(cnt[c]);
        cy[c] /= double(cnt[c]);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        std::size_t c = std::size_t(a.labels[i]);
        double dx = pts(i, 0) - cx[c], dy = pts(i, 1) - cy[c];
        inertia += dx * dx + dy * dy;
    }
    CHECK(a.inertia == doctest::Approx(inertia).epsilon(1e-8));
}

TEST_CASE("kmeans beats or matches every random assignment on a tiny instance") {
    std::mt19937_64 rng(43);
    Matrix pts(6, 2, {0.0, 0.0, 0.1, 0.0, 5.0, 5.0, 5.1, 5.0, 9.0, 0.0, 9.1, 0.0});
    ClusterAssignment a = kmeans(pts, 3, 8, 100, 1e-12, rng);

    // exhaustive check over all 3^6 labelings: no assignment has lower cost
    double best_cost = 1e300;
    for (int code = 0; code < 729; ++code) {
        int c = code;
        std::vector<int> lab(6);
        for (auto& l : lab) {
            l = c % 3;
            c /= 3;
        }
        double cost = 0.0;
        bool ok = true;
        for (int cl = 0; cl < 3; ++cl) {
            double sx = 0, sy = 0;
            int m = 0;
            for (std::size_t i = 0; i < 6; ++i)
                if (lab[i] == cl) {
                    sx += pts(i, 0);
                    sy += pts(i, 1);
                    ++m;
                }
            if (m == 0) {
                ok = false;
                break;
            }
            sx /= m;
            sy /= m;
            for (std::size_t i = 0; i < 6; ++i)
                if (lab[i] == cl) {
                    double dx = pts(i, 0) - sx, dy = pts(i, 1) - sy;
                    cost += dx * dx + dy * dy;
                }
        }
        if (ok) best_cost = std::min(best_cost, cost);
    }
    CHECK(a.inertia == doctest::Approx(best_cost).epsilon(1e-9));
}

TEST_CASE("kmeans is deterministic for a fixed seed and rejects bad inputs") {
    std::mt19937_64 r1(44), r2(44);
    std::mt19937_64 aux(45);
    Matrix pts = blob_points({{0, 0}, {3, 3}}, 20, 0.4, aux);
    ClusterAssignment a = kmeans(pts, 2, 4, 50, 1e-10, r1);
    ClusterAssignment b = kmeans(pts, 2, 4, 50, 1e-10, r2);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);

    std::mt19937_64 r3(46);
    CHECK_THROWS_AS(kmeans(pts, 0, 1, 10, 1e-10, r3), ContractError);
    CHECK_THROWS_AS(kmeans(pts, 41, 1, 10, 1e-10, r3), ContractError);
    CHECK_THROWS_AS(kmeans(Matrix(0, 2), 2, 1, 10, 1e-10, r3), ContractError);
}

TEST_CASE("kmeans with k equal to the point count isolates every point") {
    std::mt19937_64 rng(47);
    Matrix pts(4, 1, {0.0, 1.0, 2.0, 3.0});
    ClusterAssignment a = kmeans(pts, 4, 3, 50, 1e-12, rng);
    std::vector<int> sorted = a.labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    CHECK(sorted.size() == 4);
    CHECK(a.inertia == doctest::Approx(0.0));
}

TEST_CASE("jacobi reproduces a hand-diagonalized symmetric matrix") {
    // eigenvalues of [[2,1],[1,2]] are 1 and 3
    Matrix m(2, 2, {2.0, 1.0, 1.0, 2.0});
    auto [evals, evecs] = jacobi_eigh(m);
    REQUIRE(evals.size() == 2);
    CHECK(evals[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(evals[1] == doctest::Approx(3.0).epsilon(1e-10));

    // residual || M v - lambda v || per eigenpair
    for (std::size_t p = 0; p < 2; ++p) {
        for (std::size_t r = 0; r < 2; ++r) {
            double mv = 0.0;
            for (std::size_t c = 0; c < 2; ++c) mv += m(r, c) * evecs(c, p);
            CHECK(std::abs(mv - evals[p] * evecs(r, p)) < 1e-10);
        }
    }
}

TEST_CASE("jacobi handles a larger random symmetric matrix") {
    std::mt19937_64 rng(48);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::size_t n = 12;
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r; c < n; ++c) {
            double v = u(rng);
            m(r, c) = v;
            m(c, r) = v;
        }
    auto [evals, evecs] = jacobi_eigh(m);

    CHECK(std::is_sorted(evals.begin(), evals.end()));
    double trace = 0.0, esum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        trace += m(i, i);
        esum += evals[i];
    }
    CHECK(esum == doctest::Approx(trace).epsilon(1e-9));

    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t r = 0; r < n; ++r) {
            double mv = 0.0;
            for (std::size_t c = 0; c < n; ++c) mv += m(r, c) * evecs(c, p);
            CHECK(std::abs(mv - evals[p] * evecs(r, p)) < 1e-8);
        }
}

TEST_CASE("spectral clustering separates concentric rings where kmeans cannot") {
    std::mt19937_64 rng(49);
    std::normal_distribution<double> jitter(0.0, 0.02);
    std::size_t per_ring = 60;
    Matrix pts(2 * per_ring, 2);
    std::vector<int> truth;
    for (std::size_t i = 0; i < per_ring; ++i) {
        double t = 2.0 * 3.14159265358979 * double(i) / double(per_ring);
        pts(i, 0) = 0.4 * std::cos(t) + jitter(rng);
        pts(i, 1) = 0.4 * std::sin(t) + jitter(rng);
        truth.push_back(1);
        pts(per_ring + i, 0) = 2.0 * std::cos(t) + jitter(rng);
        pts(per_ring + i, 1) = 2.0 * std::sin(t) + jitter(rng);
    }
    for (std::size_t i = 0; i < per_ring; ++i) truth.push_back(2);

    ClusterAssignment s = spectral(pts, 2, 0.3, rng);
    double s_acc = clustering_accuracy(truth, s.labels);
    CHECK(s_acc == 1.0);

    ClusterAssignment km = kmeans(pts, 2, 5, 100, 1e-10, rng);
    double km_acc = clustering_accuracy(truth, km.labels);
    CHECK(s_acc > km_acc);
}

TEST_CASE("spectral rejects oversized inputs") {
    std::mt19937_64 rng(50);
    Matrix pts(30, 2);
    CHECK_THROWS_AS(spectral(pts, 2, 0.5, rng, 20), ContractError);
}

TEST_CASE("clustering accuracy equals exhaustive matching on random labelings") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> kdist(1, 5);
        int kt = kdist(rng), kp = kdist(rng);
        std::uniform_int_distribution<std::size_t> ndist(1, 14);
        std::size_t n = ndist(rng);

        std::vector<int> truth(n), pred(n);
        std::uniform_int_distribution<int> tl(1, kt), pl(1, kp);
        for (auto& v : truth) v = tl(rng);
        for (auto& v : pred) v = pl(rng);

        double fast = clustering_accuracy(truth, pred);
        double slow = brute_force_accuracy(truth, pred);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("clustering accuracy is invariant to relabeling and perfect on identity") {
    std::vector<int> truth{1, 1, 2, 2, 3, 3};
    CHECK(clustering_accuracy(truth, truth) == 1.0);
    std::vector<int> renamed{7, 7, 5, 5, 9, 9};
    CHECK(clustering_accuracy(truth, renamed) == 1.0);
    std::vector<int> merged{1, 1, 1, 1, 3, 3};
    CHECK(clustering_accuracy(truth, merged) == doctest::Approx(4.0 / 6.0));
    CHECK_THROWS_AS(clustering_accuracy(truth, std::vector<int>{1, 2}), ShapeError);
    CHECK_THROWS_AS(clustering_accuracy({}, {}), ContractError);
}

TEST_CASE("interclass js divergence is symmetric, bounded and zero on the diagonal") {
    Matrix a(2, 3, {1.0, 0.0, 0.0, 0.5, 0.5, 0.0});
    Matrix b(2, 3, {0.0, 0.0, 1.0, 0.0, 0.5, 0.5});
    Matrix c(2, 3, {0.5, 0.25, 0.25, 0.25, 0.5, 0.25});
    JsMatrix js = interclass_js({a, b, c});

    REQUIRE(js.values.rows() == 3);
    REQUIRE(js.values.cols() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(js.values(i, i) == 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(js.values(i, j) == js.values(j, i));
            CHECK(js.values(i, j) >= 0.0);
            CHECK(js.values(i, j) <= std::log(2.0) + 1e-12);
        }
    }

    double min_off = 1e300;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) min_off = std::min(min_off, js.values(i, j));
    CHECK(js.min_off_diagonal == doctest::Approx(min_off));
}

TEST_CASE("js divergence hits ln 2 on disjoint supports") {
    // rows are distributions; the two classes never overlap in any feature
    Matrix a(2, 2, {1.0, 0.0, 1.0, 0.0});
    Matrix b(2, 2, {0.0, 1.0, 0.0, 1.0});
    JsMatrix js = interclass_js({a, b});
    CHECK(js.values(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("js divergence against a scalar-loop oracle") {
    Matrix a(1, 4, {0.4, 0.3, 0.2, 0.1});
    Matrix b(1, 4, {0.1, 0.2, 0.3, 0.4});
    JsMatrix js = interclass_js({a, b});

    double kl_am = 0.0, kl_bm = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
        double pa = a(0, t), pb = b(0, t), m = 0.5 * (pa + pb);
        if (pa > 0.0) kl_am += pa * std::log(pa / m);
        if (pb > 0.0) kl_bm += pb * std::log(pb / m);
    }
    double oracle = 0.5 * (kl_am + kl_bm);
    CHECK(js.values(0, 1) == doctest::Approx(oracle).epsilon(1e-12));
}
