#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lskt/numerics/graph.hpp"
#include "lskt/numerics/ops.hpp"
#include "lskt/numerics/rng.hpp"

namespace lskt {

enum class IrtLevel { NI, OnePL, TwoPL, ThreePL };

std::string to_string(IrtLevel level);
// Accepts "NI", "1PL", "2PL", "3PL" (case-insensitive). Throws ConfigError.
IrtLevel parse_irt_level(std::string_view text);

struct VariantConfig {
    IrtLevel irt_level = IrtLevel::ThreePL;
    bool guess_enabled_in_eval = false;
};

// Parameter names of the embedding tables.
namespace emb {
inline const std::string concept_table = "emb.concept";            // [C,D]
inline const std::string concept_variation = "emb.concept_var";    // [C,D]
inline const std::string response_table = "emb.response";          // [2,D]
inline const std::string response_variation = "emb.response_var";  // [2,D]
inline const std::string difficulty = "emb.difficulty";            // [E]
inline const std::string exercise_latent = "emb.exercise_latent";  // [E,D]
inline const std::string guess_response = "emb.guess_response";    // [2,D]
// Projections W1..W6; W3 is [D,D], the rest [2D,D]. Each [2D,D] projection has
// a "<name>.bias" vector of length D.
std::string projection(int index);
std::string projection_bias(int index);
} // namespace emb

// Adds every embedding table. Vocabulary sizes include the padding index 0.
// Matrices are uniform on ±1/√fan_in, difficulty scalars start at 0, biases at 0.
void add_embedding_parameters(ParameterStore& store, std::size_t concept_vocab, std::size_t exercise_vocab,
                              std::size_t dim, Rng& rng);

// Names of the parameters an IRT level actually reads.
std::vector<std::string> embedding_parameters_used(IrtLevel level);

// Per-step indices of one sequence (all spans have the same length L).
struct StepIndices {
    std::span<const std::size_t> concepts;
    std::span<const std::size_t> exercises;
    std::span<const std::size_t> responses;
};

// Guess perturbation for one step of the 3PL interaction.
enum class GuessDraw { none, wrong, correct };

// Two fair coins: none with probability 1/2, wrong and correct 1/4 each.
std::vector<GuessDraw> sample_guess_draws(std::size_t length, Rng& rng);

// c_{t+1} for each step; the final step repeats its own concept.
std::vector<std::size_t> next_concepts(std::span<const std::size_t> concepts);

// x_t for every step, [L,D].
//   NI:       c
//   1PL:      [c ∥ α·c′]W1
//   2PL/3PL:  c + ([Repeat(α,D) ∥ d·W3]W4) ⊙ c′
Var embed_exercise(Graph& g, ParameterStore& store, IrtLevel level, const StepIndices& steps);

// y = [g ∥ α·g′]W2 with g = c + r, g′ = c′ + r′.
Var embed_interaction_1pl(Graph& g, ParameterStore& store, const StepIndices& steps);

// y = g + ([Repeat(α,D) ∥ d·W3]W5) ⊙ g′.
Var embed_interaction_2pl(Graph& g, ParameterStore& store, const StepIndices& steps);

// y = f + g + ([Repeat(α,D) ∥ d·W3]W6) ⊙ g′ with f = c_{t+1} + G, where G is
// 0 or the guess-response row selected by `draws`.
Var embed_interaction_3pl(Graph& g, ParameterStore& store, const StepIndices& steps,
                          std::span<const std::size_t> next_concept, std::span<const GuessDraw> draws);

// Samples draws in train mode (or when guessing is enabled for eval) and
// uses "none" otherwise. Train mode without an RNG is a ContractError.
Var embed_interaction_3pl(Graph& g, ParameterStore& store, const StepIndices& steps,
                          std::span<const std::size_t> next_concept, bool train_mode, bool guess_in_eval,
                          Rng* rng);

struct Embedded {
    Var exercise;     // x, [L,D]
    Var interaction;  // y, [L,D]
};

// x = c, y = c + r.
Embedded embed_ni(Graph& g, ParameterStore& store, const StepIndices& steps);

// Dispatches on the IRT level.
Embedded embed_sequence(Graph& g, ParameterStore& store, const VariantConfig& variant, const StepIndices& steps,
                        bool train_mode, Rng* rng);

} // namespace lskt
