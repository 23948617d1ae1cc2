#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "lskt/data.hpp"
#include "lskt/numerics/errors.hpp"
#include "oracles.hpp"

using namespace lskt;

namespace {

std::vector<InteractionRecord> learner(const std::string& id, std::size_t n, std::size_t exercises = 7) {
    std::vector<InteractionRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t e = i % exercises;
        out.push_back({id, "E" + std::to_string(e), "C" + std::to_string(e % 3), static_cast<int>(i % 2),
                       static_cast<std::int64_t>(i)});
    }
    return out;
}

std::vector<InteractionRecord> corpus(std::size_t learners, std::size_t per_learner) {
    std::vector<InteractionRecord> all;
    for (std::size_t l = 0; l < learners; ++l) {
        auto r = learner("L" + std::to_string(l), per_learner);
        all.insert(all.end(), r.begin(), r.end());
    }
    return all;
}

std::string error_of(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_csv(in, "test.csv");
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(ParseCsv, RowsInFileOrder) {
    std::istringstream in(std::string(kCsvHeader) + "\nb,E2,C1,1,3\na,E1,C1,0,1\nb,E1,C1,0,2\n");
    const auto recs = parse_csv(in);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].learner_id, "b");
    EXPECT_EQ(recs[0].order, 3);
    EXPECT_EQ(recs[1].response, 0);
    EXPECT_EQ(recs[2].exercise_id, "E1");
}

TEST(ParseCsv, HeaderOnlyOrEmptyGivesNothing) {
    std::istringstream header(std::string(kCsvHeader) + "\n");
    EXPECT_TRUE(parse_csv(header).empty());
    std::istringstream empty("");
    EXPECT_TRUE(parse_csv(empty).empty());
}

TEST(ParseCsv, ErrorsCiteTheLine) {
    const std::string h = std::string(kCsvHeader) + "\n";
    const std::string bad_response = error_of(h + "a,E1,C1,1,1\na,E1,C1,0,2\na,E1,C1,1,3\na,E1,C1,2,4\n");
    EXPECT_NE(bad_response.find("line 5"), std::string::npos) << bad_response;
    const std::string missing = error_of(h + "a,E1,C1,1\n");
    EXPECT_NE(missing.find("line 2"), std::string::npos) << missing;
    EXPECT_NE(error_of("learner,exercise\n"), "");
    EXPECT_NE(error_of(h + "a,E1,C1,1,x\n").find("line 2"), std::string::npos);
    EXPECT_THROW(parse_csv(std::filesystem::path("/nonexistent/file.csv")), DataError);
}

TEST(Vocabulary, PaddingSlotAndUnknownIds) {
    Vocabulary v;
    EXPECT_EQ(v.size(), 1u);
    EXPECT_EQ(v.add("x"), 1u);
    EXPECT_EQ(v.add("y"), 2u);
    EXPECT_EQ(v.add("x"), 1u);
    EXPECT_EQ(v.index("y"), 2u);
    EXPECT_EQ(v.id(1), "x");
    EXPECT_THROW(v.index("z"), DataError);
}

TEST(BuildSequences, LongHistoryIsChunked) {
    const SequenceSet set = build_sequences(learner("a", 450), 200);
    ASSERT_EQ(set.sequences.size(), 3u);
    EXPECT_EQ(set.sequences[0].valid_length, 200u);
    EXPECT_EQ(set.sequences[1].valid_length, 200u);
    EXPECT_EQ(set.sequences[2].valid_length, 50u);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(set.sequences[c].chunk, c);
        EXPECT_EQ(set.sequences[c].exercises.size(), 200u);
    }
    // Chunks continue where the previous one stopped.
    EXPECT_EQ(set.exercises.id(set.sequences[1].exercises[0]), "E" + std::to_string(200 % 7));
}

TEST(BuildSequences, ShortHistoryIsPadded) {
    const SequenceSet set = build_sequences(learner("a", 5), 200);
    ASSERT_EQ(set.sequences.size(), 1u);
    const Sequence& s = set.sequences[0];
    EXPECT_EQ(s.valid_length, 5u);
    for (std::size_t t = 5; t < 200; ++t) {
        EXPECT_EQ(s.exercises[t], 0u);
        EXPECT_EQ(s.concepts[t], 0u);
        EXPECT_EQ(s.responses[t], 0u);
    }
    for (std::size_t t = 0; t < 5; ++t) EXPECT_NE(s.exercises[t], 0u);
}

TEST(BuildSequences, SortsByOrderKeyAndSharesVocabulary) {
    std::vector<InteractionRecord> recs{{"a", "X", "K", 1, 9}, {"b", "X", "K", 0, 1}, {"a", "Y", "J", 0, 2},
                                        {"b", "Y", "J", 1, 0}};
    const SequenceSet set = build_sequences(recs, 4);
    ASSERT_EQ(set.sequences.size(), 2u);
    const Sequence& a = set.sequences[0];
    const Sequence& b = set.sequences[1];
    EXPECT_EQ(a.learner_id, "a");
    EXPECT_EQ(set.exercises.id(a.exercises[0]), "Y");
    EXPECT_EQ(a.responses[1], 1u);
    EXPECT_EQ(set.exercises.id(b.exercises[0]), "Y");
    EXPECT_EQ(a.exercises[1], b.exercises[1]);
    EXPECT_EQ(set.exercise_concept[set.exercises.index("X")], set.concepts.index("K"));
    EXPECT_EQ(set.exercise_concept[0], 0u);
}

TEST(BuildSequences, SkipsSingleInteractionLearnersAndTails) {
    auto recs = learner("solo", 1);
    auto more = learner("a", 201);
    recs.insert(recs.end(), more.begin(), more.end());
    const SequenceSet set = build_sequences(recs, 200);
    ASSERT_EQ(set.sequences.size(), 1u);
    EXPECT_EQ(set.skipped_learners, std::vector<std::string>{"solo"});
    EXPECT_EQ(set.dropped_tail_chunks, 1u);
    EXPECT_TRUE(set.skipped_report().contains("skipped_learners"));
    EXPECT_THROW(build_sequences(recs, 1), ConfigError);
}

TEST(Split, TenLearnersGiveEightAndTwo) {
    const SequenceSet set = build_sequences(corpus(10, 6), 10);
    const DataSplit s = split_by_learner(set, 0.8, 3);
    EXPECT_EQ(s.train_learners.size(), 8u);
    EXPECT_EQ(s.test_learners.size(), 2u);
    const DataSplit again = split_by_learner(set, 0.8, 3);
    EXPECT_EQ(s.train, again.train);
    EXPECT_EQ(s.hash(), again.hash());
}

TEST(Split, ChunksStayWithTheirLearner) {
    const SequenceSet set = build_sequences(corpus(12, 25), 10);
    ASSERT_EQ(set.sequences.size(), 36u);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DataSplit s = split_by_learner(set, 0.8, seed);
        std::set<std::string> train, test;
        for (auto i : s.train) train.insert(set.sequences[i].learner_id);
        for (auto i : s.test) test.insert(set.sequences[i].learner_id);
        for (const auto& l : train) EXPECT_FALSE(test.count(l)) << l;
        EXPECT_EQ(s.train.size() + s.test.size(), 36u);
        EXPECT_EQ(train.size(), s.train_learners.size());
        const double target = 0.8 * 12.0;
        EXPECT_LE(std::abs(static_cast<double>(train.size()) - target), 1.0);
    }
}

TEST(Split, TooFewLearnersIsAContractError) {
    const SequenceSet set = build_sequences(learner("a", 10), 5);
    EXPECT_THROW(split_by_learner(set, 0.8, 1), ContractError);
    const SequenceSet two = build_sequences(corpus(2, 4), 5);
    const DataSplit s = split_by_learner(two, 0.8, 1);
    EXPECT_EQ(s.train_learners.size(), 1u);
    EXPECT_EQ(s.test_learners.size(), 1u);
    EXPECT_THROW(split_by_learner(two, 1.0, 1), ConfigError);
}

TEST(MakeBatch, RowMajorLayout) {
    const SequenceSet set = build_sequences(corpus(3, 4), 6);
    const SequenceBatch b = make_batch(set, {2, 0});
    EXPECT_EQ(b.batch_size, 2u);
    EXPECT_EQ(b.length, 6u);
    EXPECT_EQ(b.learner_ids, (std::vector<std::string>{"L2", "L0"}));
    for (std::size_t t = 0; t < 6; ++t) {
        EXPECT_EQ(b.exercises[b.at(0, t)], set.sequences[2].exercises[t]);
        EXPECT_EQ(b.responses[b.at(1, t)], set.sequences[0].responses[t]);
    }
    EXPECT_EQ(b.valid_lengths, (std::vector<std::size_t>{4, 4}));
}

TEST(Synth, DeterministicAndStructured) {
    SynthSpec spec;
    spec.learners = 20;
    spec.sequence_length = 15;
    const auto a = synth_generate(spec);
    const auto b = synth_generate(spec);
    ASSERT_EQ(a.size(), 300u);
    std::ostringstream sa, sb;
    write_csv(sa, a);
    write_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    spec.seed += 1;
    std::ostringstream sc;
    write_csv(sc, synth_generate(spec));
    EXPECT_NE(sa.str(), sc.str());
    // Exercise e belongs to concept e mod C; ids are 1-based in the CSV.
    for (const auto& r : a) {
        const int e = std::stoi(r.exercise_id.substr(1)) - 1;
        EXPECT_EQ(std::stoi(r.concept_id.substr(1)) - 1, e % 25);
    }
}

TEST(Synth, HighAbilityIsNearlyAlwaysCorrect) {
    SynthSpec spec;
    spec.learners = 200;
    spec.ability_mean = 4.0;
    spec.ability_spread = 0.0;
    spec.difficulty_spread = 0.0;
    spec.discrimination_spread = 0.0;
    spec.drift = 0.0;
    spec.guess = 0.0;
    spec.slip = 0.0;
    double correct = 0.0;
    const auto recs = synth_generate(spec);
    for (const auto& r : recs) correct += r.response;
    const double rate = correct / static_cast<double>(recs.size());
    EXPECT_GT(rate, 0.95);
    EXPECT_NEAR(rate, oracle::sigmoid(4.0), 0.01);
}

TEST(Synth, ZeroDiscriminationGivesTheMidpointRate) {
    SynthSpec spec;
    spec.learners = 200;
    spec.discrimination_mean = 0.0;
    spec.drift = 0.0;
    spec.guess = 0.2;
    spec.slip = 0.1;
    double correct = 0.0;
    const auto recs = synth_generate(spec);
    ASSERT_EQ(recs.size(), 10000u);
    for (const auto& r : recs) correct += r.response;
    EXPECT_NEAR(correct / 1e4, 0.2 + (1.0 - 0.2 - 0.1) * 0.5, 0.02);
}

TEST(Synth, InvalidSpecsAndJson) {
    SynthSpec spec;
    spec.learners = 0;
    EXPECT_THROW(synth_generate(spec), ConfigError);
    spec = SynthSpec{};
    spec.guess = 0.7;
    spec.slip = 0.5;
    EXPECT_THROW(spec.validate(), ConfigError);
    const SynthSpec back = SynthSpec::from_json({{"learners", 7}, {"guess", 0.3}});
    EXPECT_EQ(back.learners, 7u);
    EXPECT_EQ(back.guess, 0.3);
    EXPECT_EQ(back.slip, SynthSpec{}.slip);
    EXPECT_EQ(SynthSpec::from_json(SynthSpec{}.to_json()).to_json(), SynthSpec{}.to_json());
    EXPECT_THROW(SynthSpec::from_json({{"bogus", 1}}), ConfigError);
}

TEST(RoundTrip, SynthCsvParseRebuildsTheSameBatch) {
    SynthSpec spec;
    spec.learners = 30;
    spec.sequence_length = 23;
    const auto recs = synth_generate(spec);
    const auto dir = oracle::scratch_dir("roundtrip");
    write_csv(dir / "x.csv", recs);
    const auto parsed = parse_csv(dir / "x.csv");
    ASSERT_EQ(parsed.size(), recs.size());
    const SequenceSet a = build_sequences(recs, 10);
    const SequenceSet b = build_sequences(parsed, 10);
    ASSERT_EQ(a.sequences.size(), b.sequences.size());
    std::vector<std::size_t> all(a.sequences.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const SequenceBatch ba = make_batch(a, all), bb = make_batch(b, all);
    EXPECT_EQ(ba.exercises, bb.exercises);
    EXPECT_EQ(ba.concepts, bb.concepts);
    EXPECT_EQ(ba.responses, bb.responses);
    EXPECT_EQ(ba.valid_lengths, bb.valid_lengths);
    EXPECT_EQ(ba.learner_ids, bb.learner_ids);
}
