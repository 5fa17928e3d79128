#include "wander/qdaif.hpp"

#include <cstdio>

#include "wander/errors.hpp"
#include "wander/evolve.hpp"
#include "wander/metrics.hpp"

namespace wander {

const std::string_view kCellTemplate =
    "You are evolving text prompts for an image generation model.\n"
    "Rewrite the prompt below so that the resulting image is rated\n"
    "{axis1_name}: {axis1_bin}\n"
    "{axis2_name}: {axis2_bin}\n"
    "\n"
    "Prompt: {prompt}\n"
    "\n"
    "Reply with the new prompt only, without quotation marks or commentary.";

namespace {

constexpr std::uint64_t kQdaifDecision = 11;
constexpr std::uint64_t kQdaifMutate = 12;
constexpr std::uint64_t kQdaifGenerate = 13;

std::size_t cell_index(const Grid& g, Cell c) {
    return static_cast<std::size_t>(c.first) * static_cast<std::size_t>(g.axis2_bins()) +
           static_cast<std::size_t>(c.second);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

Grid::Grid(int axis1_bins, int axis2_bins) : bins1_(axis1_bins), bins2_(axis2_bins) {
    if (axis1_bins < 2 || axis2_bins < 2) throw ConfigError("a grid axis needs at least two bins");
    cells_.resize(static_cast<std::size_t>(axis1_bins) * static_cast<std::size_t>(axis2_bins));
}

bool Grid::contains(Cell c) const noexcept {
    return c.first >= 0 && c.first < bins1_ && c.second >= 0 && c.second < bins2_;
}

const std::optional<Elite>& Grid::at(Cell c) const {
    if (!contains(c)) throw DomainError("cell outside the grid");
    return cells_[cell_index(*this, c)];
}

std::optional<Elite>& Grid::at(Cell c) {
    if (!contains(c)) throw DomainError("cell outside the grid");
    return cells_[cell_index(*this, c)];
}

std::size_t Grid::filled() const noexcept {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.has_value();
    return n;
}

double Grid::coverage() const noexcept {
    return static_cast<double>(filled()) / static_cast<double>(cells_.size());
}

double Grid::qd_score() const noexcept {
    double s = 0.0;
    for (const auto& c : cells_) {
        if (c) s += c->rating.quality;
    }
    return s;
}

std::vector<const Elite*> Grid::elites() const {
    std::vector<const Elite*> out;
    for (const auto& c : cells_) {
        if (c) out.push_back(&*c);
    }
    return out;
}

Cell pick_target_cell(const Grid& grid, Rng& rng) {
    std::vector<Cell> empty;
    for (int i = 0; i < grid.axis1_bins(); ++i) {
        for (int j = 0; j < grid.axis2_bins(); ++j) {
            if (!grid.at({i, j})) empty.emplace_back(i, j);
        }
    }
    if (!empty.empty()) return empty[rng.uniform_index(empty.size())];
    const std::size_t k = rng.uniform_index(grid.cell_count());
    return {static_cast<int>(k / static_cast<std::size_t>(grid.axis2_bins())),
            static_cast<int>(k % static_cast<std::size_t>(grid.axis2_bins()))};
}

std::string_view to_string(ArchiveOutcome o) noexcept {
    switch (o) {
        case ArchiveOutcome::new_elite: return "new_elite";
        case ArchiveOutcome::displaced: return "displaced";
        case ArchiveOutcome::discarded: return "discarded";
    }
    return "?";
}

ArchiveOutcome archive_insert(Grid& grid, Individual individual, const protocol::RateResponse& rating) {
    const Cell cell{rating.axis1_bin, rating.axis2_bin};
    if (!grid.contains(cell)) throw DomainError("rating bins fall outside the grid");
    auto& slot = grid.at(cell);
    if (!slot) {
        slot = Elite{std::move(individual), rating};
        return ArchiveOutcome::new_elite;
    }
    if (rating.quality > slot->rating.quality) {
        slot = Elite{std::move(individual), rating};
        return ArchiveOutcome::displaced;
    }
    return ArchiveOutcome::discarded;
}

std::string render_cell_instruction(std::string_view parent_prompt, const std::vector<protocol::AxisSpec>& axes,
                                    Cell target) {
    if (axes.size() != 2) throw ConfigError("cell-directed mutation needs exactly two axes");
    const auto& a1 = axes[0];
    const auto& a2 = axes[1];
    if (target.first < 0 || static_cast<std::size_t>(target.first) >= a1.bins.size() || target.second < 0 ||
        static_cast<std::size_t>(target.second) >= a2.bins.size()) {
        throw DomainError("target cell outside the axes");
    }
    return render_template(kCellTemplate, {{"axis1_name", a1.name},
                                           {"axis1_bin", a1.bins[static_cast<std::size_t>(target.first)]},
                                           {"axis2_name", a2.name},
                                           {"axis2_bin", a2.bins[static_cast<std::size_t>(target.second)]},
                                           {"prompt", parent_prompt}});
}

QdaifResult qdaif_run(const RunConfig& config, const Providers& providers, std::optional<std::size_t> steps) {
    validate(config);
    if (!providers.rater) throw ConfigError("the QDAIF baseline needs a rater provider");
    const auto& axes = config.qdaif.axes;
    const int bins1 = static_cast<int>(axes[0].bins.size());
    const int bins2 = static_cast<int>(axes[1].bins.size());
    QdaifResult result;
    result.grid = Grid(bins1, bins2);
    Grid& grid = result.grid;
    const std::size_t total = steps.value_or(config.qdaif.steps);

    for (std::size_t step = 0; step < total; ++step) {
        QdaifEvent e;
        e.step = step;
        e.child_id = IndividualId{"q" + std::to_string(step)};
        Rng rng(derive_seed(config.seed, {kQdaifDecision, step}));
        e.target = pick_target_cell(grid, rng);

        std::string parent_prompt = config.initial_prompt;
        const auto elites = grid.elites();
        if (!elites.empty()) {
            const Elite* parent = elites[rng.uniform_index(elites.size())];
            e.parent = parent->individual.id;
            parent_prompt = parent->individual.prompt;
        }
        e.instruction = render_cell_instruction(parent_prompt, axes, e.target);

        MutationContext ctx;
        ctx.kind = MutationContext::Kind::target_cell;
        ctx.parent_prompts = {parent_prompt};
        ctx.target_cell = e.target;
        ctx.axis1_bins = bins1;
        ctx.axis2_bins = bins2;
        ctx.seed = derive_seed(config.seed, {kQdaifMutate, step});

        try {
            const protocol::MutateRequest req{e.instruction, config.mutator.model_id, config.mutator.temperature,
                                              config.mutator.max_output_length};
            const auto reply = with_retries(config.retry, [&] { return providers.mutator->mutate(req, ctx); });
            e.token_usage = reply.token_usage.value_or(protocol::TokenUsage{
                protocol::estimate_tokens(e.instruction), protocol::estimate_tokens(reply.output_text), true});
            result.tokens += e.token_usage.total();
            std::string prompt = clean_mutator_output(reply.output_text);
            if (prompt.empty()) {
                e.error = "mutator returned an empty prompt";
            } else {
                e.child_prompt = prompt;
                const protocol::GenerateRequest greq{prompt, config.generator.model_id, config.generator.image_size,
                                                     derive_seed(config.seed, {kQdaifGenerate, step})};
                const auto gen = with_retries(config.retry, [&] { return providers.generator->generate(greq); });
                e.artifact_ref = gen.artifact_ref;
                const protocol::RateRequest rreq{gen.artifact_ref, axes};
                const auto rating = with_retries(config.retry, [&] { return providers.rater->rate(rreq); });
                if (rating.axis1_bin < 0 || rating.axis1_bin >= bins1 || rating.axis2_bin < 0 ||
                    rating.axis2_bin >= bins2 || !(rating.quality >= 0.0 && rating.quality <= 1.0)) {
                    throw ProtocolError("rater returned a rating outside the grid or the [0, 1] quality range");
                }
                e.rating = rating;
                EmbeddingVector image = with_retries(config.retry, [&] {
                    return providers.embedder->embed({protocol::Modality::image, gen.artifact_ref}).embedding;
                });
                if (image.is_zero()) {
                    e.error = "embedder returned a zero image embedding";
                } else {
                    Individual child;
                    child.id = e.child_id;
                    child.prompt = prompt;
                    child.artifact_ref = gen.artifact_ref;
                    child.embedding = std::move(image);
                    child.born_generation = static_cast<int>(step + 1);
                    e.outcome = archive_insert(grid, std::move(child), rating);
                }
            }
        } catch (const TransportError& err) {
            if (!err.retryable()) throw;
            e.error = std::string("provider failed after retries: ") + err.what();
        }

        QdaifStepMetrics m;
        m.step = step;
        m.coverage = grid.coverage();
        m.qd_score = grid.qd_score();
        const auto now = grid.elites();
        if (!now.empty()) {
            std::vector<EmbeddingVector> embs;
            for (const Elite* el : now) embs.push_back(el->individual.embedding);
            m.vendi = vendi_score(embs);
        }
        result.series.push_back(m);
        result.events.push_back(std::move(e));
    }
    return result;
}

std::string grid_csv(const Grid& grid, const std::vector<protocol::AxisSpec>& axes) {
    std::string out = csv_field(axes.at(0).name + " \\ " + axes.at(1).name);
    for (const auto& label : axes.at(1).bins) out += "," + csv_field(label);
    out += '\n';
    for (int i = 0; i < grid.axis1_bins(); ++i) {
        out += csv_field(axes.at(0).bins.at(static_cast<std::size_t>(i)));
        for (int j = 0; j < grid.axis2_bins(); ++j) {
            out += ',';
            if (const auto& c = grid.at({i, j})) out += fmt(c->rating.quality);
        }
        out += '\n';
    }
    return out;
}

nlohmann::json grid_manifest(const Grid& grid, const std::vector<protocol::AxisSpec>& axes) {
    nlohmann::json cells = nlohmann::json::array();
    for (int i = 0; i < grid.axis1_bins(); ++i) {
        for (int j = 0; j < grid.axis2_bins(); ++j) {
            const auto& c = grid.at({i, j});
            nlohmann::json cell{{"axis1_bin", i},
                                {"axis2_bin", j},
                                {"axis1_label", axes.at(0).bins.at(static_cast<std::size_t>(i))},
                                {"axis2_label", axes.at(1).bins.at(static_cast<std::size_t>(j))}};
            if (c) {
                cell["id"] = c->individual.id.value;
                cell["prompt"] = c->individual.prompt;
                cell["artifact_ref"] = c->individual.artifact_ref;
                cell["quality"] = c->rating.quality;
            }
            cells.push_back(std::move(cell));
        }
    }
    return {{"axes", {{{"name", axes.at(0).name}, {"bins", axes.at(0).bins}},
                      {{"name", axes.at(1).name}, {"bins", axes.at(1).bins}}}},
            {"coverage", grid.coverage()},
            {"qd_score", grid.qd_score()},
            {"cells", cells}};
}

nlohmann::json to_json(const QdaifEvent& e) {
    nlohmann::json j{{"step", e.step},
                     {"target", {e.target.first, e.target.second}},
                     {"instruction", e.instruction},
                     {"child_id", e.child_id.value},
                     {"token_usage",
                      {{"prompt_tokens", e.token_usage.prompt_tokens},
                       {"completion_tokens", e.token_usage.completion_tokens},
                       {"estimated", e.token_usage.estimated}}}};
    if (e.parent) j["parent"] = e.parent->value;
    if (e.child_prompt) j["child_prompt"] = *e.child_prompt;
    if (e.artifact_ref) j["artifact_ref"] = *e.artifact_ref;
    if (e.rating) j["rating"] = protocol::to_json(*e.rating);
    if (e.outcome) j["outcome"] = std::string(to_string(*e.outcome));
    if (e.error) j["error"] = *e.error;
    return j;
}

nlohmann::json to_json(const QdaifStepMetrics& m) {
    nlohmann::json j{{"step", m.step}, {"coverage", m.coverage}, {"qd_score", m.qd_score}};
    if (m.vendi) j["vendi"] = *m.vendi;
    return j;
}

}  // namespace wander
