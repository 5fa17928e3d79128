#include "wander/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "wander/errors.hpp"

namespace wander {
namespace {

void require_set(std::span<const EmbeddingVector> embeddings, const char* what) {
    if (embeddings.size() < 2) throw DomainError(std::string(what) + " needs at least two vectors");
    const std::size_t d = embeddings[0].dim();
    for (const auto& e : embeddings) {
        if (e.dim() != d) throw StructuralError(std::string(what) + ": dimension mismatch");
        require_nonzero(e);
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double SimilarityMatrix::mean_off_diagonal() const noexcept {
    if (n_ < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) sum += (*this)(i, j);
    }
    return sum / (static_cast<double>(n_ * (n_ - 1)) / 2.0);
}

std::string SimilarityMatrix::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            if (j) out.push_back(',');
            out += fmt((*this)(i, j));
        }
        out.push_back('\n');
    }
    return out;
}

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> embeddings) {
    require_set(embeddings, "similarity_matrix");
    const std::size_t n = embeddings.size();
    SimilarityMatrix k(n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = cosine_similarity(embeddings[i], embeddings[j]);
            k(i, j) = s;
            k(j, i) = s;
        }
    }
    return k;
}

double vendi_score(const SimilarityMatrix& k) {
    const std::size_t n = k.size();
    if (n == 0) throw DomainError("vendi_score of an empty set");
    Eigen::MatrixXd m(n, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                0.5 * (k(i, j) + k(j, i)) * inv_n;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("vendi_score: eigen-decomposition of a " + std::to_string(n) + "x" +
                             std::to_string(n) + " kernel did not converge");
    }
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        const double lambda = solver.eigenvalues()(i);
        if (lambda < -1e-9) {
            throw NumericalError("vendi_score: kernel eigenvalue " + fmt(lambda) +
                                 " is negative beyond tolerance (n=" + std::to_string(n) + ")");
        }
        if (lambda < 1e-12) continue;
        entropy -= lambda * std::log(lambda);
    }
    return std::exp(entropy);
}

double vendi_score(std::span<const EmbeddingVector> embeddings) {
    if (embeddings.size() == 1) {
        require_nonzero(embeddings[0]);
        return 1.0;
    }
    return vendi_score(similarity_matrix(embeddings));
}

double mean_pairwise_distance(std::span<const EmbeddingVector> embeddings) {
    require_set(embeddings, "mean_pairwise_distance");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            sum += cosine_distance(embeddings[i], embeddings[j]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

double relevance(const EmbeddingVector& initial, std::span<const EmbeddingVector> prompts) {
    if (prompts.empty()) throw DomainError("relevance of an empty pool");
    double sum = 0.0;
    for (const auto& p : prompts) sum += cosine_similarity(initial, p);
    return sum / static_cast<double>(prompts.size());
}

TokenTotals token_totals(std::span<const TokenCall> calls) {
    TokenTotals t;
    std::uint64_t estimated = 0;
    for (const auto& c : calls) {
        const std::uint64_t n = c.prompt_tokens + c.completion_tokens;
        t.prompt_tokens += c.prompt_tokens;
        t.completion_tokens += c.completion_tokens;
        t.total += n;
        if (c.kind == "mutation") {
            t.mutation += n;
        } else if (c.kind == "crossover") {
            t.crossover += n;
        } else {
            t.other += n;
        }
        if (c.estimated) estimated += n;
    }
    t.estimated_fraction = t.total == 0 ? 0.0 : static_cast<double>(estimated) / static_cast<double>(t.total);
    return t;
}

MetricRecord compute_metrics(int generation, const Pool& pool, const EmbeddingVector& initial_prompt_embedding,
                             std::uint64_t cumulative_tokens, std::uint64_t embed_calls) {
    if (pool.empty()) throw DomainError("compute_metrics on an empty pool");
    MetricRecord r;
    r.generation = generation;
    r.cumulative_tokens = cumulative_tokens;
    r.embed_calls = embed_calls;
    r.pool_size = pool.size();

    std::vector<EmbeddingVector> images;
    std::vector<EmbeddingVector> texts;
    for (const auto& m : pool.members()) {
        images.push_back(m.embedding);
        if (m.prompt_embedding) texts.push_back(*m.prompt_embedding);
    }
    if (images.size() >= 2) {
        const auto k = similarity_matrix(images);
        r.vendi = vendi_score(k);
        r.mean_pairwise_distance = 1.0 - k.mean_off_diagonal();
        r.min_novelty = score_pool(pool).min_score;
    }
    if (!texts.empty()) r.relevance = relevance(initial_prompt_embedding, texts);
    return r;
}

std::string metrics_csv_header() {
    return "generation,vendi,mean_pairwise_distance,min_novelty,relevance,cumulative_tokens,embed_calls,"
           "pool_size,perceptual_distance";
}

std::string to_csv_row(const MetricRecord& r) {
    std::ostringstream os;
    os << r.generation << ',' << fmt(r.vendi) << ',' << fmt(r.mean_pairwise_distance) << ','
       << fmt(r.min_novelty) << ',' << fmt(r.relevance) << ',' << r.cumulative_tokens << ','
       << r.embed_calls << ',' << r.pool_size << ',';
    if (r.perceptual_distance) os << fmt(*r.perceptual_distance);
    return os.str();
}

}  // namespace wander
