#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace lskt {

inline constexpr const char* kCsvHeader = "learner_id,exercise_id,concept_id,response,order";

struct InteractionRecord {
    std::string learner_id;
    std::string exercise_id;
    std::string concept_id;
    int response = 0;
    std::int64_t order = 0;
};

// Reads the five-column interaction CSV. Errors (DataError) cite the 1-based
// line number. A header-only or empty file yields no records.
std::vector<InteractionRecord> parse_csv(const std::filesystem::path& path);
std::vector<InteractionRecord> parse_csv(std::istream& in, const std::string& source = "<stream>");

void write_csv(const std::filesystem::path& path, const std::vector<InteractionRecord>& records);
void write_csv(std::ostream& out, const std::vector<InteractionRecord>& records);

// String id → dense index. Index 0 is reserved for padding.
class Vocabulary {
public:
    Vocabulary() : ids_{""} {}

    std::size_t add(const std::string& id);
    // Throws DataError for an unknown id.
    std::size_t index(const std::string& id) const;
    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    const std::string& id(std::size_t index) const { return ids_.at(index); }
    // Includes the padding slot.
    std::size_t size() const noexcept { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

// One fixed-length chunk of a learner's history, zero-padded past
// valid_length.
struct Sequence {
    std::string learner_id;
    std::size_t chunk = 0;
    std::size_t valid_length = 0;
    std::vector<std::size_t> exercises;
    std::vector<std::size_t> concepts;
    std::vector<std::size_t> responses;
};

struct SequenceSet {
    std::size_t max_length = 0;
    std::vector<Sequence> sequences;
    Vocabulary exercises;
    Vocabulary concepts;
    // Concept index of each exercise index (first occurrence); 0 for padding.
    std::vector<std::size_t> exercise_concept;
    std::vector<std::string> skipped_learners;  // fewer than 2 interactions
    std::size_t dropped_tail_chunks = 0;       // single-step remainders

    nlohmann::json skipped_report() const;
};

// Sorts each learner's records by order key (stable), cuts them into
// consecutive chunks of at most `max_length`, pads, and builds corpus-wide
// vocabularies in order of first appearance.
SequenceSet build_sequences(const std::vector<InteractionRecord>& records, std::size_t max_length);

struct DataSplit {
    std::vector<std::size_t> train;  // indices into SequenceSet::sequences
    std::vector<std::size_t> test;
    std::vector<std::string> train_learners;
    std::vector<std::string> test_learners;

    // FNV-1a over the sorted learner lists; identifies the split.
    std::string hash() const;
};

// Learner-level split: every chunk of a learner lands on the same side.
// round(fraction · learners) learners go to train (at least one per side).
DataSplit split_by_learner(const SequenceSet& set, double train_fraction, std::uint64_t seed);

// Padded batch in row-major [B, L] layout.
struct SequenceBatch {
    std::size_t batch_size = 0;
    std::size_t length = 0;
    std::vector<std::size_t> exercises;
    std::vector<std::size_t> concepts;
    std::vector<std::size_t> responses;
    std::vector<std::size_t> valid_lengths;
    std::vector<std::string> learner_ids;

    std::size_t at(std::size_t b, std::size_t t) const { return b * length + t; }
};

SequenceBatch make_batch(const SequenceSet& set, const std::vector<std::size_t>& indices);

struct SynthSpec {
    std::size_t learners = 500;
    std::size_t concepts = 25;
    std::size_t exercises = 200;
    std::size_t sequence_length = 50;
    double ability_mean = 0.0;
    double ability_spread = 1.0;
    double difficulty_spread = 1.0;
    // a_e = discrimination_mean · exp(discrimination_spread · N(0,1)).
    double discrimination_mean = 1.0;
    double discrimination_spread = 0.3;
    double drift = 0.05;
    double guess = 0.1;
    double slip = 0.05;
    std::uint64_t seed = 2024;

    // Throws ConfigError.
    void validate() const;
    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys raise ConfigError.
    static SynthSpec from_json(const nlohmann::json& j);
};

// Per learner: θ ~ N(mean, spread); each step draws an exercise uniformly,
// p_know = σ(a_e(θ − b_e)), p = guess + (1 − guess − slip)·p_know, response
// ~ Bernoulli(p), θ += drift after a correct answer. Exercise e belongs to
// concept e mod concepts.
std::vector<InteractionRecord> synth_generate(const SynthSpec& spec);

} // namespace lskt
