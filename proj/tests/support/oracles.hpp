#pragma once

// Brute-force reference implementations used by the tests. Deliberately naive: long
// double, full sorts, cyclic Jacobi instead of a library eigensolver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include "wander/core/pool.hpp"
#include "wander/rng.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline long double dot(const std::vector<float>& a, const std::vector<float>& b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return s;
}

inline double cosine_distance(const std::vector<float>& a, const std::vector<float>& b) {
    const long double c = dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
    return static_cast<double>(1.0L - std::clamp(c, -1.0L, 1.0L));
}

inline std::vector<float> values(const wander::EmbeddingVector& v) {
    return {v.values().begin(), v.values().end()};
}

/// Sort all distances from `c` to the members (except `skip`) and average the first k.
inline double novelty(const std::vector<float>& c, const std::vector<std::vector<float>>& members, std::size_t k,
                      std::ptrdiff_t skip = -1) {
    std::vector<double> d;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (static_cast<std::ptrdiff_t>(i) == skip) continue;
        d.push_back(cosine_distance(c, members[i]));
    }
    std::sort(d.begin(), d.end());
    const std::size_t kk = std::min(k, d.size());
    long double s = 0.0L;
    for (std::size_t i = 0; i < kk; ++i) s += d[i];
    return static_cast<double>(s / kk);
}

inline double min_member_novelty(const std::vector<std::vector<float>>& members, std::size_t k) {
    double m = 1e300;
    for (std::size_t i = 0; i < members.size(); ++i) {
        m = std::min(m, novelty(members[i], members, k, static_cast<std::ptrdiff_t>(i)));
    }
    return m;
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
inline Vec jacobi_eigenvalues(Mat a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a[r][p];
                    const double arq = a[r][q];
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = a[p][r];
                    const double aqr = a[q][r];
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    return ev;
}

/// exp of the natural-log Shannon entropy.
inline double exp_entropy(const Vec& lambda) {
    long double h = 0.0L;
    for (double l : lambda)
        if (l > 1e-12) h -= static_cast<long double>(l) * std::log(static_cast<long double>(l));
    return static_cast<double>(std::exp(h));
}

/// Same quantity through base-2 logarithms.
inline double exp_entropy_base2(const Vec& lambda) {
    long double bits = 0.0L;
    for (double l : lambda)
        if (l > 1e-12) bits += static_cast<long double>(l) * std::log2(static_cast<long double>(l));
    return static_cast<double>(std::pow(2.0L, -bits));
}

inline double vendi(const std::vector<std::vector<float>>& xs) {
    const std::size_t n = xs.size();
    Mat k(n, Vec(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k[i][j] = (1.0 - cosine_distance(xs[i], xs[j])) / static_cast<double>(n);
    return exp_entropy(jacobi_eigenvalues(k));
}

inline std::vector<float> random_vector(wander::Rng& rng, std::size_t d) {
    std::vector<float> v(d);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

inline std::vector<float> unit(std::size_t d, std::size_t axis, float value = 1.0f) {
    std::vector<float> v(d, 0.0f);
    v[axis] = value;
    return v;
}

inline double spearman(const Vec& a, const Vec& b) {
    auto ranks = [](const Vec& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        Vec r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const Vec ra = ranks(a);
    const Vec rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle

namespace testing {

inline wander::Individual individual(const std::string& id, std::vector<float> v) {
    wander::Individual ind;
    ind.id = wander::IndividualId{id};
    ind.prompt = id;
    ind.artifact_ref = "ref:" + id;
    ind.embedding = wander::EmbeddingVector(std::move(v));
    return ind;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wander-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
