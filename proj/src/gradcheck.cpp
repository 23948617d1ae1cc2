#include "lskt/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>

#include "lskt/numerics/errors.hpp"

namespace lskt {

bool GradcheckReport::passed() const {
    return std::all_of(groups.begin(), groups.end(), [](const GroupResult& g) { return g.passed; });
}

ModelConfig gradcheck_defaults() {
    ModelConfig c;
    c.dim = 8;
    c.max_length = 12;
    c.batch_size = 2;
    c.clusters = 2;
    c.dropout = 0.0;
    c.guess_in_eval = false;
    c.epochs = 1;
    return c;
}

void validate_gradcheck_config(const ModelConfig& config) {
    config.validate();
    if (config.dropout != 0.0 || config.guess_in_eval) throw ConfigError("gradcheck requires deterministic mode");
    if (config.dim > kGradcheckMaxDim || config.max_length > kGradcheckMaxLength) {
        throw ConfigError("gradcheck is limited to dim <= " + std::to_string(kGradcheckMaxDim) + " and max_length <= " +
                          std::to_string(kGradcheckMaxLength));
    }
}

namespace {

SequenceSet gradcheck_data(const ModelConfig& config) {
    SynthSpec spec;
    spec.learners = config.batch_size;
    spec.concepts = 4;
    spec.exercises = 6;
    spec.sequence_length = config.max_length;
    spec.seed = config.seed;
    auto records = synth_generate(spec);
    // Shorten every other learner so the batch carries padding.
    std::vector<InteractionRecord> kept;
    std::map<std::string, std::size_t> seen;
    std::size_t learner_no = 0;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.try_emplace(r.learner_id, learner_no);
        if (inserted) ++learner_no;
        const std::size_t cap = it->second % 2 == 1 ? std::max<std::size_t>(2, config.max_length - 3) : config.max_length;
        if (seen[r.learner_id]++ < cap) kept.push_back(r);
    }
    return build_sequences(kept, config.max_length);
}

double relative_error(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

} // namespace

GradcheckReport run_gradcheck(const ModelConfig& config, const GradcheckOptions& options) {
    validate_gradcheck_config(config);
    const auto started = std::chrono::steady_clock::now();

    SequenceSet data = gradcheck_data(config);
    std::vector<std::size_t> all(data.sequences.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    SequenceBatch batch = make_batch(data, all);
    LsktModel model = make_variant(config, data.concepts.size(), data.exercises.size());

    // Fit clusters on the batch's own states so the sparse mask is active,
    // then freeze the labels: perturbations must not flip an assignment.
    ClusterModel clusters;
    clusters.clusters = config.clusters;
    std::vector<std::vector<int>> labels(batch.batch_size);
    if (model.flags().learning_state_enhancement) {
        Graph g(false);
        ForwardResult warm = model.forward(g, batch, clusters);
        StatePool pool(std::max(config.pool_capacity, batch.batch_size));
        pool.push_batch(warm.learning_states());
        Rng km(derive_seed(config.seed, {6}));
        clusters = kmeans_fit(pool, config.clusters, config.kmeans_iterations, km);
        Graph g2(false);
        ForwardResult labelled = model.forward(g2, batch, clusters);
        for (std::size_t b = 0; b < batch.batch_size; ++b) labels[b] = labelled.traces[b].labels;
    }
    ForwardOptions opts{false, nullptr, &labels};

    std::vector<std::uint8_t> pattern;
    auto loss_value = [&]() {
        Graph g(false);
        pattern.clear();
        g.set_activation_trace(&pattern);
        ForwardResult r = model.forward(g, batch, clusters, opts);
        return bce_loss(r.predictions, r.targets).value().item();
    };
    loss_value();
    const std::vector<std::uint8_t> base_pattern = pattern;

    ParameterStore& store = model.params();
    store.zero_grad();
    {
        Graph g;
        ForwardResult r = model.forward(g, batch, clusters, opts);
        Var loss = bce_loss(r.predictions, r.targets);
        if (options.fault_scale != 1.0) {
            const double s = options.fault_scale;
            loss = g.record(loss.value(), {loss}, [loss, s](Graph& gr, const Tensor& d) {
                if (Tensor* slot = gr.grad_slot(loss)) (*slot)[0] += s * d[0];
            });
        }
        g.backward(loss);
    }

    GradcheckReport report;
    report.sequences = batch.batch_size;
    for (const auto& seq_labels : labels) {
        for (std::size_t i = 0; i < seq_labels.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) report.masked_pairs += seq_labels[i] != seq_labels[j];
        }
    }

    std::map<ParameterGroup, GroupResult> groups;
    for (ParameterGroup pg : {ParameterGroup::embeddings, ParameterGroup::lse, ParameterGroup::fusion, ParameterGroup::head}) {
        groups[pg].group = pg;
    }
    const double h = options.step;
    for (const auto& name : store.names()) {
        GroupResult& gr = groups[parameter_group(name)];
        Parameter& p = store.at(name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double original = p.value[i];
            p.value[i] = original + h;
            const double up = loss_value();
            const bool up_kink = pattern != base_pattern;
            p.value[i] = original - h;
            const double down = loss_value();
            const bool down_kink = pattern != base_pattern;
            p.value[i] = original;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p.grad[i];
            if (up_kink || down_kink) {
                // A ReLU input changed sign inside the stencil: the central
                // difference straddles a kink and says nothing about the
                // derivative at the centre.
                ++gr.kinked;
                const double err = std::max(std::abs(analytic), std::abs(numeric)) > 0.0 ? relative_error(analytic, numeric) : 0.0;
                gr.max_kinked_error = std::max(gr.max_kinked_error, err);
            } else if (std::max(std::abs(analytic), std::abs(numeric)) > options.floor) {
                double err = relative_error(analytic, numeric);
                if (!std::isfinite(err)) err = INFINITY;
                ++gr.checked;
                if (err > gr.max_rel_error || gr.worst.empty()) {
                    gr.max_rel_error = err;
                    gr.worst = name + "[" + std::to_string(i) + "]";
                }
            } else {
                ++gr.near_zero;
                gr.max_near_zero_gap = std::max(gr.max_near_zero_gap, std::abs(analytic - numeric));
            }
        }
    }
    for (auto& [pg, gr] : groups) {
        gr.passed = gr.max_rel_error <= options.tolerance && gr.max_near_zero_gap <= options.floor;
        report.groups.push_back(gr);
    }
    store.zero_grad();
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

} // namespace lskt
