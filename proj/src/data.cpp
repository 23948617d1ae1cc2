#include "lskt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lskt/numerics/errors.hpp"
#include "lskt/numerics/rng.hpp"

namespace lskt {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string where(const std::string& source, std::size_t line) {
    return source + " line " + std::to_string(line) + ": ";
}

} // namespace

std::vector<InteractionRecord> parse_csv(std::istream& in, const std::string& source) {
    std::vector<InteractionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kCsvHeader) {
                throw DataError(where(source, line_no) + "expected header '" + kCsvHeader + "', got '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != 5) {
            throw DataError(where(source, line_no) + "expected 5 columns, found " + std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (fields[i].empty()) throw DataError(where(source, line_no) + "empty id in column " + std::to_string(i + 1));
        }
        InteractionRecord rec{fields[0], fields[1], fields[2], 0, 0};
        if (fields[3] == "0") {
            rec.response = 0;
        } else if (fields[3] == "1") {
            rec.response = 1;
        } else {
            throw DataError(where(source, line_no) + "response must be 0 or 1, got '" + fields[3] + "'");
        }
        const auto& ord = fields[4];
        auto [ptr, ec] = std::from_chars(ord.data(), ord.data() + ord.size(), rec.order);
        if (ec != std::errc{} || ptr != ord.data() + ord.size() || ord.empty()) {
            throw DataError(where(source, line_no) + "order must be an integer, got '" + ord + "'");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<InteractionRecord> parse_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const std::vector<InteractionRecord>& records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.learner_id << ',' << r.exercise_id << ',' << r.concept_id << ',' << r.response << ',' << r.order << '\n';
    }
}

void write_csv(const fs::path& path, const std::vector<InteractionRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_csv(out, records);
}

std::size_t Vocabulary::add(const std::string& id) {
    auto [it, inserted] = index_.try_emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
}

std::size_t Vocabulary::index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown id '" + id + "'");
    return it->second;
}

nlohmann::json SequenceSet::skipped_report() const {
    return {{"skipped_learners", skipped_learners},
            {"skipped_learner_count", skipped_learners.size()},
            {"dropped_tail_chunks", dropped_tail_chunks}};
}

SequenceSet build_sequences(const std::vector<InteractionRecord>& records, std::size_t max_length) {
    if (max_length < 2) throw ConfigError("sequence length must be >= 2");
    SequenceSet set;
    set.max_length = max_length;
    set.exercise_concept.push_back(0);

    std::vector<std::string> learner_order;
    std::unordered_map<std::string, std::vector<std::size_t>> by_learner;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::size_t before = set.exercises.size();
        const std::size_t e = set.exercises.add(r.exercise_id);
        const std::size_t c = set.concepts.add(r.concept_id);
        if (set.exercises.size() != before) set.exercise_concept.push_back(c);
        (void)e;
        auto [it, inserted] = by_learner.try_emplace(r.learner_id);
        if (inserted) learner_order.push_back(r.learner_id);
        it->second.push_back(i);
    }

    for (const auto& learner : learner_order) {
        auto& rows = by_learner[learner];
        std::stable_sort(rows.begin(), rows.end(),
                         [&](std::size_t a, std::size_t b) { return records[a].order < records[b].order; });
        if (rows.size() < 2) {
            set.skipped_learners.push_back(learner);
            continue;
        }
        for (std::size_t start = 0, chunk = 0; start < rows.size(); start += max_length, ++chunk) {
            const std::size_t n = std::min(max_length, rows.size() - start);
            if (n < 2) {
                ++set.dropped_tail_chunks;
                continue;
            }
            Sequence seq;
            seq.learner_id = learner;
            seq.chunk = chunk;
            seq.valid_length = n;
            seq.exercises.assign(max_length, 0);
            seq.concepts.assign(max_length, 0);
            seq.responses.assign(max_length, 0);
            for (std::size_t t = 0; t < n; ++t) {
                const auto& r = records[rows[start + t]];
                seq.exercises[t] = set.exercises.index(r.exercise_id);
                seq.concepts[t] = set.concepts.index(r.concept_id);
                seq.responses[t] = static_cast<std::size_t>(r.response);
            }
            set.sequences.push_back(std::move(seq));
        }
    }
    return set;
}

std::string DataSplit::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xFF;
        h *= 1099511628211ULL;
    };
    auto train = train_learners, test = test_learners;
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    for (const auto& s : train) feed(s);
    feed("|");
    for (const auto& s : test) feed(s);
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

DataSplit split_by_learner(const SequenceSet& set, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0,1)");
    std::vector<std::string> learners;
    for (const auto& s : set.sequences) {
        if (learners.empty() || learners.back() != s.learner_id) learners.push_back(s.learner_id);
    }
    if (learners.size() < 2) throw ContractError("split needs at least 2 learners, have " + std::to_string(learners.size()));

    Rng rng(seed);
    for (std::size_t i = learners.size() - 1; i > 0; --i) std::swap(learners[i], learners[rng.below(i + 1)]);
    std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(learners.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, learners.size() - 1);

    DataSplit split;
    split.train_learners.assign(learners.begin(), learners.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_learners.assign(learners.begin() + static_cast<std::ptrdiff_t>(n_train), learners.end());
    std::unordered_map<std::string, bool> in_train;
    for (const auto& l : split.train_learners) in_train[l] = true;
    for (const auto& l : split.test_learners) in_train[l] = false;
    for (std::size_t i = 0; i < set.sequences.size(); ++i) {
        (in_train.at(set.sequences[i].learner_id) ? split.train : split.test).push_back(i);
    }
    return split;
}

SequenceBatch make_batch(const SequenceSet& set, const std::vector<std::size_t>& indices) {
    SequenceBatch batch;
    batch.batch_size = indices.size();
    batch.length = set.max_length;
    const std::size_t L = set.max_length;
    batch.exercises.reserve(indices.size() * L);
    batch.concepts.reserve(indices.size() * L);
    batch.responses.reserve(indices.size() * L);
    for (std::size_t idx : indices) {
        const Sequence& s = set.sequences.at(idx);
        batch.exercises.insert(batch.exercises.end(), s.exercises.begin(), s.exercises.end());
        batch.concepts.insert(batch.concepts.end(), s.concepts.begin(), s.concepts.end());
        batch.responses.insert(batch.responses.end(), s.responses.begin(), s.responses.end());
        batch.valid_lengths.push_back(s.valid_length);
        batch.learner_ids.push_back(s.learner_id);
    }
    return batch;
}

void SynthSpec::validate() const {
    if (learners < 1 || concepts < 1 || exercises < 1 || sequence_length < 1) {
        throw ConfigError("synthetic spec counts must be >= 1");
    }
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
    };
    prob(guess, "guess");
    prob(slip, "slip");
    if (guess + slip > 1.0) throw ConfigError("guess + slip must not exceed 1");
    if (ability_spread < 0.0 || difficulty_spread < 0.0 || discrimination_spread < 0.0) {
        throw ConfigError("spreads must be non-negative");
    }
}

nlohmann::json SynthSpec::to_json() const {
    return {{"learners", learners},
            {"concepts", concepts},
            {"exercises", exercises},
            {"sequence_length", sequence_length},
            {"ability_mean", ability_mean},
            {"ability_spread", ability_spread},
            {"difficulty_spread", difficulty_spread},
            {"discrimination_mean", discrimination_mean},
            {"discrimination_spread", discrimination_spread},
            {"drift", drift},
            {"guess", guess},
            {"slip", slip},
            {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
    SynthSpec s;
    const auto known = s.to_json();
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown synth key '" + key + "'");
    }
    try {
        s.learners = j.value("learners", s.learners);
        s.concepts = j.value("concepts", s.concepts);
        s.exercises = j.value("exercises", s.exercises);
        s.sequence_length = j.value("sequence_length", s.sequence_length);
        s.ability_mean = j.value("ability_mean", s.ability_mean);
        s.ability_spread = j.value("ability_spread", s.ability_spread);
        s.difficulty_spread = j.value("difficulty_spread", s.difficulty_spread);
        s.discrimination_mean = j.value("discrimination_mean", s.discrimination_mean);
        s.discrimination_spread = j.value("discrimination_spread", s.discrimination_spread);
        s.drift = j.value("drift", s.drift);
        s.guess = j.value("guess", s.guess);
        s.slip = j.value("slip", s.slip);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad synth value: ") + e.what());
    }
    return s;
}

namespace {

std::string padded_id(char prefix, std::size_t value, std::size_t width) {
    std::string digits = std::to_string(value);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

std::size_t digits_for(std::size_t n) { return std::to_string(n).size(); }

} // namespace

std::vector<InteractionRecord> synth_generate(const SynthSpec& spec) {
    spec.validate();
    Rng item_rng(derive_seed(spec.seed, {1}));
    std::vector<double> difficulty(spec.exercises), discrimination(spec.exercises);
    for (std::size_t e = 0; e < spec.exercises; ++e) {
        difficulty[e] = item_rng.normal(0.0, spec.difficulty_spread);
        discrimination[e] = spec.discrimination_mean * std::exp(spec.discrimination_spread * item_rng.normal());
    }

    const std::size_t lw = digits_for(spec.learners), ew = digits_for(spec.exercises), cw = digits_for(spec.concepts);
    std::vector<InteractionRecord> records;
    records.reserve(spec.learners * spec.sequence_length);
    Rng rng(derive_seed(spec.seed, {2}));
    for (std::size_t l = 0; l < spec.learners; ++l) {
        double theta = rng.normal(spec.ability_mean, spec.ability_spread);
        const std::string learner = padded_id('L', l + 1, lw);
        for (std::size_t t = 0; t < spec.sequence_length; ++t) {
            const std::size_t e = rng.below(spec.exercises);
            const double logit = discrimination[e] * (theta - difficulty[e]);
            const double p_know = 1.0 / (1.0 + std::exp(-logit));
            const double p = spec.guess + (1.0 - spec.guess - spec.slip) * p_know;
            const int response = rng.bernoulli(p) ? 1 : 0;
            if (response == 1) theta += spec.drift;
            records.push_back({learner, padded_id('E', e + 1, ew), padded_id('C', e % spec.concepts + 1, cw), response,
                               static_cast<std::int64_t>(t + 1)});
        }
    }
    return records;
}

} // namespace lskt
