#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wander/config.hpp"
#include "wander/core/pool.hpp"
#include "wander/providers/protocol.hpp"
#include "wander/providers/provider.hpp"
#include "wander/rng.hpp"

namespace wander {

using Cell = std::pair<int, int>;

struct Elite {
    Individual individual;
    protocol::RateResponse rating;

    friend bool operator==(const Elite&, const Elite&) = default;
};

/// Two-axis MAP-Elites archive with at most one elite per cell.
class Grid {
public:
    /// Throws ConfigError for fewer than two bins on either axis.
    Grid(int axis1_bins, int axis2_bins);

    int axis1_bins() const noexcept { return bins1_; }
    int axis2_bins() const noexcept { return bins2_; }
    std::size_t cell_count() const noexcept { return cells_.size(); }

    const std::optional<Elite>& at(Cell cell) const;
    std::optional<Elite>& at(Cell cell);
    bool contains(Cell cell) const noexcept;

    std::size_t filled() const noexcept;
    double coverage() const noexcept;
    /// Sum of elite qualities.
    double qd_score() const noexcept;
    /// Elites in row-major cell order.
    std::vector<const Elite*> elites() const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int bins1_;
    int bins2_;
    std::vector<std::optional<Elite>> cells_;
};

/// Uniform over empty cells while any remain, then uniform over all cells.
Cell pick_target_cell(const Grid& grid, Rng& rng);

enum class ArchiveOutcome { new_elite, displaced, discarded };
std::string_view to_string(ArchiveOutcome outcome) noexcept;

/// Empty cell: new elite. Occupied: displaced iff the quality is strictly higher.
/// Throws DomainError when the rating's bins are outside the grid.
ArchiveOutcome archive_insert(Grid& grid, Individual individual, const protocol::RateResponse& rating);

extern const std::string_view kCellTemplate;
std::string render_cell_instruction(std::string_view parent_prompt, const std::vector<protocol::AxisSpec>& axes,
                                    Cell target);

struct QdaifEvent {
    std::size_t step = 0;
    Cell target{0, 0};
    /// Absent while the grid was empty and the initial prompt served as parent.
    std::optional<IndividualId> parent;
    std::string instruction;
    IndividualId child_id;
    std::optional<std::string> child_prompt;
    std::optional<std::string> artifact_ref;
    std::optional<protocol::RateResponse> rating;
    std::optional<ArchiveOutcome> outcome;
    std::optional<std::string> error;
    protocol::TokenUsage token_usage;

    friend bool operator==(const QdaifEvent&, const QdaifEvent&) = default;
};

struct QdaifStepMetrics {
    std::size_t step = 0;
    double coverage = 0.0;
    double qd_score = 0.0;
    /// Over elite embeddings; 1 for a single elite, absent for an empty grid.
    std::optional<double> vendi;

    friend bool operator==(const QdaifStepMetrics&, const QdaifStepMetrics&) = default;
};

struct QdaifResult {
    Grid grid{2, 2};
    std::vector<QdaifEvent> events;
    std::vector<QdaifStepMetrics> series;
    std::uint64_t tokens = 0;
};

/// config.qdaif.steps steps (or `steps` when given) against the configured rater.
/// Throws ConfigError without a rater.
QdaifResult qdaif_run(const RunConfig& config, const Providers& providers,
                      std::optional<std::size_t> steps = std::nullopt);

/// One row per axis-1 bin, one column per axis-2 bin; each cell "quality" or empty.
std::string grid_csv(const Grid& grid, const std::vector<protocol::AxisSpec>& axes);

/// Cell labels, elite ids, prompts, artifact refs and qualities: the grid's image layout.
nlohmann::json grid_manifest(const Grid& grid, const std::vector<protocol::AxisSpec>& axes);

nlohmann::json to_json(const QdaifEvent& event);
nlohmann::json to_json(const QdaifStepMetrics& metrics);

}  // namespace wander
