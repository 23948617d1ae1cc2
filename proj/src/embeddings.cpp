#include "lskt/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "lskt/numerics/errors.hpp"

namespace lskt {

std::string to_string(IrtLevel level) {
    switch (level) {
        case IrtLevel::NI: return "NI";
        case IrtLevel::OnePL: return "1PL";
        case IrtLevel::TwoPL: return "2PL";
        case IrtLevel::ThreePL: return "3PL";
    }
    return "?";
}

IrtLevel parse_irt_level(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    if (s == "NI") return IrtLevel::NI;
    if (s == "1PL") return IrtLevel::OnePL;
    if (s == "2PL") return IrtLevel::TwoPL;
    if (s == "3PL") return IrtLevel::ThreePL;
    throw ConfigError("unknown IRT level '" + std::string(text) + "' (expected NI, 1PL, 2PL or 3PL)");
}

namespace emb {
std::string projection(int index) { return "emb.W" + std::to_string(index); }
std::string projection_bias(int index) { return projection(index) + ".bias"; }
} // namespace emb

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

void check_lengths(const StepIndices& steps) {
    if (steps.exercises.size() != steps.concepts.size() || steps.responses.size() != steps.concepts.size()) {
        throw DimensionError("step index arrays differ in length");
    }
}

void check_responses(const StepIndices& steps) {
    for (std::size_t r : steps.responses) {
        if (r > 1) throw ContractError("response must be 0 or 1, got " + std::to_string(r));
    }
}

// [Repeat(α,D) ∥ d·W3]·W_k + b_k, the per-exercise modulation vector.
Var modulation(Graph& g, ParameterStore& store, const StepIndices& steps, int projection) {
    const std::size_t dim = store.value(emb::concept_table).dim(1);
    Var alpha = gather_rows(g.param(store, emb::difficulty), steps.exercises);
    Var latent = gather_rows(g.param(store, emb::exercise_latent), steps.exercises);
    Var discrimination = matmul(latent, g.param(store, emb::projection(3)));
    Var joined = concat_last(repeat_cols(alpha, dim), discrimination);
    return linear(joined, g.param(store, emb::projection(projection)), g.param(store, emb::projection_bias(projection)));
}

// g = c + r and g′ = c′ + r′.
std::pair<Var, Var> base_interaction(Graph& g, ParameterStore& store, const StepIndices& steps) {
    check_responses(steps);
    Var c = gather_rows(g.param(store, emb::concept_table), steps.concepts);
    Var r = gather_rows(g.param(store, emb::response_table), steps.responses);
    Var cv = gather_rows(g.param(store, emb::concept_variation), steps.concepts);
    Var rv = gather_rows(g.param(store, emb::response_variation), steps.responses);
    return {add(c, r), add(cv, rv)};
}

} // namespace

void add_embedding_parameters(ParameterStore& store, std::size_t concept_vocab, std::size_t exercise_vocab,
                              std::size_t dim, Rng& rng) {
    const double table_bound = 1.0 / std::sqrt(static_cast<double>(dim));
    const double wide_bound = 1.0 / std::sqrt(2.0 * static_cast<double>(dim));
    store.add(emb::concept_table, uniform_tensor({concept_vocab, dim}, table_bound, rng));
    store.add(emb::concept_variation, uniform_tensor({concept_vocab, dim}, table_bound, rng));
    store.add(emb::response_table, uniform_tensor({2, dim}, table_bound, rng));
    store.add(emb::response_variation, uniform_tensor({2, dim}, table_bound, rng));
    store.add(emb::difficulty, Tensor({exercise_vocab}, 0.0));
    store.add(emb::exercise_latent, uniform_tensor({exercise_vocab, dim}, table_bound, rng));
    store.add(emb::guess_response, uniform_tensor({2, dim}, table_bound, rng));
    for (int k = 1; k <= 6; ++k) {
        if (k == 3) {
            store.add(emb::projection(3), uniform_tensor({dim, dim}, table_bound, rng));
            continue;
        }
        store.add(emb::projection(k), uniform_tensor({2 * dim, dim}, wide_bound, rng));
        store.add(emb::projection_bias(k), Tensor({dim}, 0.0));
    }
}

std::vector<std::string> embedding_parameters_used(IrtLevel level) {
    std::vector<std::string> used{emb::concept_table, emb::response_table};
    auto add_projection = [&](int k) {
        used.push_back(emb::projection(k));
        if (k != 3) used.push_back(emb::projection_bias(k));
    };
    switch (level) {
        case IrtLevel::NI: break;
        case IrtLevel::OnePL:
            used.insert(used.end(), {emb::concept_variation, emb::response_variation, emb::difficulty});
            add_projection(1);
            add_projection(2);
            break;
        case IrtLevel::TwoPL:
            used.insert(used.end(),
                        {emb::concept_variation, emb::response_variation, emb::difficulty, emb::exercise_latent});
            add_projection(3);
            add_projection(4);
            add_projection(5);
            break;
        case IrtLevel::ThreePL:
            used.insert(used.end(), {emb::concept_variation, emb::response_variation, emb::difficulty,
                                     emb::exercise_latent, emb::guess_response});
            add_projection(3);
            add_projection(4);
            add_projection(6);
            break;
    }
    return used;
}

std::vector<GuessDraw> sample_guess_draws(std::size_t length, Rng& rng) {
    std::vector<GuessDraw> draws(length);
    for (auto& d : draws) {
        if (!rng.coin()) {
            d = GuessDraw::none;
        } else {
            d = rng.coin() ? GuessDraw::correct : GuessDraw::wrong;
        }
    }
    return draws;
}

std::vector<std::size_t> next_concepts(std::span<const std::size_t> concepts) {
    std::vector<std::size_t> next(concepts.size());
    for (std::size_t t = 0; t < concepts.size(); ++t) {
        next[t] = t + 1 < concepts.size() ? concepts[t + 1] : concepts[t];
    }
    return next;
}

Var embed_exercise(Graph& g, ParameterStore& store, IrtLevel level, const StepIndices& steps) {
    check_lengths(steps);
    Var c = gather_rows(g.param(store, emb::concept_table), steps.concepts);
    if (level == IrtLevel::NI) return c;
    Var cv = gather_rows(g.param(store, emb::concept_variation), steps.concepts);
    if (level == IrtLevel::OnePL) {
        Var alpha = gather_rows(g.param(store, emb::difficulty), steps.exercises);
        Var joined = concat_last(c, mul_col(cv, alpha));
        return linear(joined, g.param(store, emb::projection(1)), g.param(store, emb::projection_bias(1)));
    }
    return add(c, mul(modulation(g, store, steps, 4), cv));
}

Var embed_interaction_1pl(Graph& g, ParameterStore& store, const StepIndices& steps) {
    check_lengths(steps);
    auto [base, variation] = base_interaction(g, store, steps);
    Var alpha = gather_rows(g.param(store, emb::difficulty), steps.exercises);
    Var joined = concat_last(base, mul_col(variation, alpha));
    return linear(joined, g.param(store, emb::projection(2)), g.param(store, emb::projection_bias(2)));
}

Var embed_interaction_2pl(Graph& g, ParameterStore& store, const StepIndices& steps) {
    check_lengths(steps);
    auto [base, variation] = base_interaction(g, store, steps);
    return add(base, mul(modulation(g, store, steps, 5), variation));
}

Var embed_interaction_3pl(Graph& g, ParameterStore& store, const StepIndices& steps,
                          std::span<const std::size_t> next_concept, std::span<const GuessDraw> draws) {
    check_lengths(steps);
    const std::size_t L = steps.concepts.size();
    if (next_concept.size() != L || draws.size() != L) {
        throw DimensionError("3PL embedding: next-concept/draw arrays must have length " + std::to_string(L));
    }
    auto [base, variation] = base_interaction(g, store, steps);
    Var f = gather_rows(g.param(store, emb::concept_table), next_concept);
    if (std::any_of(draws.begin(), draws.end(), [](GuessDraw d) { return d != GuessDraw::none; })) {
        std::vector<std::size_t> guessed(L, 0);
        Tensor active({L, 1}, 0.0);
        for (std::size_t t = 0; t < L; ++t) {
            if (draws[t] == GuessDraw::none) continue;
            guessed[t] = draws[t] == GuessDraw::correct ? 1 : 0;
            active[t] = 1.0;
        }
        Var guess = mul_col(gather_rows(g.param(store, emb::guess_response), guessed), g.constant(std::move(active)));
        f = add(f, guess);
    }
    return add(add(f, base), mul(modulation(g, store, steps, 6), variation));
}

Var embed_interaction_3pl(Graph& g, ParameterStore& store, const StepIndices& steps,
                          std::span<const std::size_t> next_concept, bool train_mode, bool guess_in_eval,
                          Rng* rng) {
    const bool perturb = train_mode || guess_in_eval;
    std::vector<GuessDraw> draws(steps.concepts.size(), GuessDraw::none);
    if (perturb) {
        if (rng == nullptr) throw ContractError("3PL guess sampling needs an RNG");
        draws = sample_guess_draws(steps.concepts.size(), *rng);
    }
    return embed_interaction_3pl(g, store, steps, next_concept, draws);
}

Embedded embed_ni(Graph& g, ParameterStore& store, const StepIndices& steps) {
    check_lengths(steps);
    check_responses(steps);
    Var c = gather_rows(g.param(store, emb::concept_table), steps.concepts);
    Var r = gather_rows(g.param(store, emb::response_table), steps.responses);
    return {c, add(c, r)};
}

Embedded embed_sequence(Graph& g, ParameterStore& store, const VariantConfig& variant, const StepIndices& steps,
                        bool train_mode, Rng* rng) {
    switch (variant.irt_level) {
        case IrtLevel::NI: return embed_ni(g, store, steps);
        case IrtLevel::OnePL:
            return {embed_exercise(g, store, IrtLevel::OnePL, steps), embed_interaction_1pl(g, store, steps)};
        case IrtLevel::TwoPL:
            return {embed_exercise(g, store, IrtLevel::TwoPL, steps), embed_interaction_2pl(g, store, steps)};
        case IrtLevel::ThreePL: {
            const auto next = next_concepts(steps.concepts);
            return {embed_exercise(g, store, IrtLevel::ThreePL, steps),
                    embed_interaction_3pl(g, store, steps, next, train_mode, variant.guess_enabled_in_eval, rng)};
        }
    }
    throw ContractError("unknown IRT level");
}

} // namespace lskt
