#include "seqadapt/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "seqadapt/errors.hpp"
#include "seqadapt/hash.hpp"

namespace seqadapt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

// W += a (outer) b
void outer_add(Tensor2& w, std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto row = w.row(i);
        const double ai = a[i];
        for (std::size_t j = 0; j < b.size(); ++j) row[j] += ai * b[j];
    }
}

// out += W^T a
void transpose_matvec_add(const Tensor2& w, std::span<const double> a, std::span<double> out) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        auto row = w.row(i);
        const double ai = a[i];
        for (std::size_t j = 0; j < w.cols(); ++j) out[j] += ai * row[j];
    }
}

void fill_uniform(Tensor2& w, double bound, Rng& rng) {
    for (double& value : w.flat()) value = rng.uniform(-bound, bound);
}

} // namespace

void ModelDims::validate() const {
    if (embed_dim <= 0 || hidden_dim <= 0 || input_size == 0 || target_size == 0) {
        throw ValidationError("model dimensions must all be positive (embed=" +
                              std::to_string(embed_dim) + ", hidden=" +
                              std::to_string(hidden_dim) + ", inputs=" +
                              std::to_string(input_size) + ", targets=" +
                              std::to_string(target_size) + ")");
    }
}

ModelParameters ModelParameters::zeros(const ModelDims& dims) {
    dims.validate();
    const auto e = static_cast<std::size_t>(dims.embed_dim);
    const auto h = static_cast<std::size_t>(dims.hidden_dim);
    ModelParameters p;
    p.dims = dims;
    p.w_emb = Tensor2(e, dims.input_size);
    p.w_z = Tensor2(h, e);
    p.w_r = Tensor2(h, e);
    p.w_c = Tensor2(h, e);
    p.u_z = Tensor2(h, h);
    p.u_r = Tensor2(h, h);
    p.u_c = Tensor2(h, h);
    p.b_z = Tensor1(h);
    p.b_r = Tensor1(h);
    p.b_c = Tensor1(h);
    p.w_out = Tensor2(dims.target_size, h);
    p.b_out = Tensor1(dims.target_size);
    return p;
}

ModelParameters ModelParameters::init(const ModelDims& dims, Rng& rng) {
    ModelParameters p = zeros(dims);
    const double emb_bound = 1.0 / std::sqrt(static_cast<double>(dims.input_size));
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(dims.embed_dim));
    const double rec_bound = 1.0 / std::sqrt(static_cast<double>(dims.hidden_dim));
    fill_uniform(p.w_emb, emb_bound, rng);
    fill_uniform(p.w_z, in_bound, rng);
    fill_uniform(p.u_z, rec_bound, rng);
    fill_uniform(p.w_r, in_bound, rng);
    fill_uniform(p.u_r, rec_bound, rng);
    fill_uniform(p.w_c, in_bound, rng);
    fill_uniform(p.u_c, rec_bound, rng);
    fill_uniform(p.w_out, rec_bound, rng);
    return p;
}

std::array<std::span<double>, kTensorCount> ModelParameters::tensor_views() {
    return {w_emb.flat(), w_z.flat(), u_z.flat(), b_z.flat(),
            w_r.flat(),  u_r.flat(), b_r.flat(),
            w_c.flat(),  u_c.flat(), b_c.flat(),
            w_out.flat(), b_out.flat()};
}

std::array<std::span<const double>, kTensorCount> ModelParameters::tensor_views() const {
    return {w_emb.flat(), w_z.flat(), u_z.flat(), b_z.flat(),
            w_r.flat(),  u_r.flat(), b_r.flat(),
            w_c.flat(),  u_c.flat(), b_c.flat(),
            w_out.flat(), b_out.flat()};
}

std::vector<std::size_t> ModelParameters::tensor_sizes() const {
    std::vector<std::size_t> sizes;
    sizes.reserve(kTensorCount);
    for (auto view : tensor_views()) sizes.push_back(view.size());
    return sizes;
}

Tensor1 embed(const ModelParameters& params, const BinaryVec& y) {
    if (y.size() != params.dims.input_size) {
        throw DimensionError("event vector size " + std::to_string(y.size()) +
                             " does not match input size " +
                             std::to_string(params.dims.input_size));
    }
    Tensor1 v(static_cast<std::size_t>(params.dims.embed_dim));
    for (std::int32_t k : y.active()) {
        for (std::size_t j = 0; j < v.length(); ++j) {
            v[j] += params.w_emb.at(j, static_cast<std::size_t>(k));
        }
    }
    return v;
}

StepCache gru_step(const ModelParameters& params, const Tensor1& h_prev, const Tensor1& v) {
    const auto h_dim = static_cast<std::size_t>(params.dims.hidden_dim);
    if (h_prev.length() != h_dim) {
        throw DimensionError("hidden state length " + std::to_string(h_prev.length()) +
                             " does not match hidden size " + std::to_string(h_dim));
    }
    if (v.length() != static_cast<std::size_t>(params.dims.embed_dim)) {
        throw DimensionError("embedded input length " + std::to_string(v.length()) +
                             " does not match embedding size " +
                             std::to_string(params.dims.embed_dim));
    }
    StepCache step;
    step.v = v;
    step.z = Tensor1(h_dim);
    step.r = Tensor1(h_dim);
    step.c = Tensor1(h_dim);
    step.h = Tensor1(h_dim);
    for (std::size_t j = 0; j < h_dim; ++j) {
        step.z[j] = sigmoid(params.b_z[j] + dot(params.w_z.row(j), v.flat()) +
                            dot(params.u_z.row(j), h_prev.flat()));
        step.r[j] = sigmoid(params.b_r[j] + dot(params.w_r.row(j), v.flat()) +
                            dot(params.u_r.row(j), h_prev.flat()));
    }
    Tensor1 gated(h_dim);
    for (std::size_t j = 0; j < h_dim; ++j) gated[j] = step.r[j] * h_prev[j];
    for (std::size_t j = 0; j < h_dim; ++j) {
        step.c[j] = std::tanh(params.b_c[j] + dot(params.w_c.row(j), v.flat()) +
                              dot(params.u_c.row(j), gated.flat()));
        step.h[j] = (1.0 - step.z[j]) * h_prev[j] + step.z[j] * step.c[j];
    }
    check_finite(step.h.flat(), "hidden state");
    return step;
}

Tensor1 advance_state(const ModelParameters& params, const Tensor1& h_prev, const BinaryVec& y) {
    return gru_step(params, h_prev, embed(params, y)).h;
}

Tensor1 initial_state(const ModelParameters& params) {
    return Tensor1(static_cast<std::size_t>(params.dims.hidden_dim));
}

Tensor1 predict_from_state(const ModelParameters& params, const Tensor1& h) {
    Tensor1 probs = affine(params.w_out, h, params.b_out);
    for (double& p : probs.flat()) p = sigmoid(p);
    return probs;
}

StepPrediction predict_step(const ModelParameters& params, const Tensor1& h_prev,
                            const BinaryVec& y) {
    StepPrediction out;
    out.h = advance_state(params, h_prev, y);
    out.probs = predict_from_state(params, out.h);
    return out;
}

Tensor1 predict_next(const ModelParameters& params, std::span<const BinaryVec> history) {
    Tensor1 h = initial_state(params);
    for (const BinaryVec& y : history) h = advance_state(params, h, y);
    return predict_from_state(params, h);
}

ForwardCache run_forward(const ModelParameters& params, std::span<const BinaryVec> inputs) {
    ForwardCache cache;
    cache.steps.reserve(inputs.size());
    Tensor1 h = initial_state(params);
    for (const BinaryVec& y : inputs) {
        cache.steps.push_back(gru_step(params, h, embed(params, y)));
        h = cache.steps.back().h;
    }
    return cache;
}

double bce_event_loss(const BinaryVec& target, const Tensor1& probs) {
    if (probs.length() != target.size()) {
        throw DimensionError("probability vector length " + std::to_string(probs.length()) +
                             " does not match target size " + std::to_string(target.size()));
    }
    constexpr double kClamp = 1e-12;
    double loss = 0.0;
    const std::vector<double> y = target.dense();
    for (std::size_t k = 0; k < probs.length(); ++k) {
        const double p = std::min(std::max(probs[k], kClamp), 1.0 - kClamp);
        loss -= y[k] * std::log(p) + (1.0 - y[k]) * std::log(1.0 - p);
    }
    return loss;
}

double sequence_loss(const ModelParameters& params, const EventSequence& seq) {
    seq.validate(params.dims.input_size, params.dims.target_size);
    const int predicted = seq.steps() - 1;
    ForwardCache cache =
        run_forward(params, std::span(seq.inputs).first(static_cast<std::size_t>(predicted)));
    double total = 0.0;
    for (int t = 1; t <= predicted; ++t) {
        const Tensor1 probs =
            predict_from_state(params, cache.steps[static_cast<std::size_t>(t) - 1].h);
        total += bce_event_loss(seq.target_at(t), probs);
    }
    return total;
}

double sequence_loss(const ModelParameters& params, const Dataset& dataset) {
    double total = 0.0;
    for (const EventSequence& seq : dataset) total += sequence_loss(params, seq);
    return total;
}

BackwardResult backward(const ModelParameters& params, const EventSequence& seq,
                        std::span<const double> step_weights) {
    seq.validate(params.dims.input_size, params.dims.target_size);
    const int predicted = seq.steps() - 1;
    if (step_weights.size() != static_cast<std::size_t>(predicted)) {
        throw DimensionError("expected " + std::to_string(predicted) + " step weights, got " +
                             std::to_string(step_weights.size()));
    }
    const auto h_dim = static_cast<std::size_t>(params.dims.hidden_dim);

    ForwardCache cache =
        run_forward(params, std::span(seq.inputs).first(static_cast<std::size_t>(predicted)));
    std::vector<Tensor1> probs;
    probs.reserve(static_cast<std::size_t>(predicted));
    BackwardResult result;
    result.grads = ModelParameters::zeros(params.dims);
    result.step_losses.resize(static_cast<std::size_t>(predicted));
    for (int t = 1; t <= predicted; ++t) {
        const std::size_t i = static_cast<std::size_t>(t) - 1;
        probs.push_back(predict_from_state(params, cache.steps[i].h));
        result.step_losses[i] = bce_event_loss(seq.target_at(t), probs[i]);
        result.weighted_loss += step_weights[i] * result.step_losses[i];
    }

    ModelParameters& g = result.grads;
    const Tensor1 h0 = initial_state(params);
    Tensor1 dh(h_dim);
    Tensor1 dh_prev(h_dim), dz(h_dim), dc(h_dim), da_z(h_dim), da_r(h_dim), da_c(h_dim);
    for (int t = predicted; t >= 1; --t) {
        const std::size_t i = static_cast<std::size_t>(t) - 1;
        const StepCache& step = cache.steps[i];
        const Tensor1& h_prev = (i == 0) ? h0 : cache.steps[i - 1].h;

        // Output head: d loss / d logits = w_t * (p - y).
        const std::vector<double> y = seq.target_at(t).dense();
        Tensor1 dlogits(params.dims.target_size);
        for (std::size_t k = 0; k < dlogits.length(); ++k) {
            dlogits[k] = step_weights[i] * (probs[i][k] - y[k]);
        }
        outer_add(g.w_out, dlogits.flat(), step.h.flat());
        for (std::size_t k = 0; k < dlogits.length(); ++k) g.b_out[k] += dlogits[k];
        transpose_matvec_add(params.w_out, dlogits.flat(), dh.flat());

        // State mix h = (1-z).h_prev + z.c.
        for (std::size_t j = 0; j < h_dim; ++j) {
            dz[j] = dh[j] * (step.c[j] - h_prev[j]);
            dc[j] = dh[j] * step.z[j];
            dh_prev[j] = dh[j] * (1.0 - step.z[j]);
        }

        // Candidate branch (tanh).
        for (std::size_t j = 0; j < h_dim; ++j) {
            da_c[j] = dc[j] * (1.0 - step.c[j] * step.c[j]);
        }
        outer_add(g.w_c, da_c.flat(), step.v.flat());
        for (std::size_t j = 0; j < h_dim; ++j) g.b_c[j] += da_c[j];
        Tensor1 gated(h_dim);
        for (std::size_t j = 0; j < h_dim; ++j) gated[j] = step.r[j] * h_prev[j];
        outer_add(g.u_c, da_c.flat(), gated.flat());
        Tensor1 dgated(h_dim);
        transpose_matvec_add(params.u_c, da_c.flat(), dgated.flat());
        for (std::size_t j = 0; j < h_dim; ++j) {
            dh_prev[j] += dgated[j] * step.r[j];
        }

        // Reset gate.
        for (std::size_t j = 0; j < h_dim; ++j) {
            const double dr = dgated[j] * h_prev[j];
            da_r[j] = dr * step.r[j] * (1.0 - step.r[j]);
        }
        outer_add(g.w_r, da_r.flat(), step.v.flat());
        outer_add(g.u_r, da_r.flat(), h_prev.flat());
        for (std::size_t j = 0; j < h_dim; ++j) g.b_r[j] += da_r[j];
        transpose_matvec_add(params.u_r, da_r.flat(), dh_prev.flat());

        // Update gate.
        for (std::size_t j = 0; j < h_dim; ++j) {
            da_z[j] = dz[j] * step.z[j] * (1.0 - step.z[j]);
        }
        outer_add(g.w_z, da_z.flat(), step.v.flat());
        outer_add(g.u_z, da_z.flat(), h_prev.flat());
        for (std::size_t j = 0; j < h_dim; ++j) g.b_z[j] += da_z[j];
        transpose_matvec_add(params.u_z, da_z.flat(), dh_prev.flat());

        // Embedding path: dv feeds the active columns of w_emb.
        Tensor1 dv(static_cast<std::size_t>(params.dims.embed_dim));
        transpose_matvec_add(params.w_z, da_z.flat(), dv.flat());
        transpose_matvec_add(params.w_r, da_r.flat(), dv.flat());
        transpose_matvec_add(params.w_c, da_c.flat(), dv.flat());
        for (std::int32_t k : seq.inputs[i].active()) {
            for (std::size_t j = 0; j < dv.length(); ++j) {
                g.w_emb.at(j, static_cast<std::size_t>(k)) += dv[j];
            }
        }

        dh = dh_prev;
    }
    for (auto view : g.tensor_views()) check_finite(view, "gradient");
    return result;
}

namespace {

constexpr char kMagic[8] = {'S', 'A', 'M', 'O', 'D', 'L', '0', '1'};

template <class T>
void put_value(std::string& buffer, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buffer.append(bytes, sizeof(T));
}

template <class T>
T take_value(const std::string& buffer, std::size_t& offset) {
    if (offset + sizeof(T) > buffer.size()) {
        throw IoError("model checkpoint truncated");
    }
    T value;
    std::memcpy(&value, buffer.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

} // namespace

void save_model(const std::string& path, const ModelParameters& params,
                std::uint64_t vocab_hash) {
    std::string payload;
    put_value(payload, static_cast<std::int32_t>(params.dims.embed_dim));
    put_value(payload, static_cast<std::int32_t>(params.dims.hidden_dim));
    put_value(payload, static_cast<std::uint64_t>(params.dims.input_size));
    put_value(payload, static_cast<std::uint64_t>(params.dims.target_size));
    put_value(payload, vocab_hash);
    for (auto view : params.tensor_views()) {
        payload.append(reinterpret_cast<const char*>(view.data()),
                       view.size() * sizeof(double));
    }
    Fnv1a64 hasher;
    hasher.update(payload.data(), payload.size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open model checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    const std::uint64_t checksum = hasher.digest();
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!out) throw IoError("write failure for model checkpoint: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model checkpoint: " + path);
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure for model checkpoint: " + path);
    if (contents.size() < sizeof(kMagic) + sizeof(std::uint64_t) ||
        std::memcmp(contents.data(), kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a model checkpoint: " + path);
    }
    const std::string payload =
        contents.substr(sizeof(kMagic), contents.size() - sizeof(kMagic) - sizeof(std::uint64_t));
    std::uint64_t stored_checksum;
    std::memcpy(&stored_checksum, contents.data() + contents.size() - sizeof(std::uint64_t),
                sizeof(std::uint64_t));
    Fnv1a64 hasher;
    hasher.update(payload.data(), payload.size());
    if (hasher.digest() != stored_checksum) {
        throw IoError("model checkpoint checksum mismatch: " + path);
    }

    std::size_t offset = 0;
    ModelDims dims;
    dims.embed_dim = take_value<std::int32_t>(payload, offset);
    dims.hidden_dim = take_value<std::int32_t>(payload, offset);
    dims.input_size = take_value<std::uint64_t>(payload, offset);
    dims.target_size = take_value<std::uint64_t>(payload, offset);
    dims.validate();
    LoadedModel loaded;
    loaded.vocab_hash = take_value<std::uint64_t>(payload, offset);
    loaded.params = ModelParameters::zeros(dims);
    for (auto view : loaded.params.tensor_views()) {
        const std::size_t bytes = view.size() * sizeof(double);
        if (offset + bytes > payload.size()) throw IoError("model checkpoint truncated");
        std::memcpy(view.data(), payload.data() + offset, bytes);
        offset += bytes;
    }
    if (offset != payload.size()) {
        throw IoError("model checkpoint has trailing bytes: " + path);
    }
    for (auto view : loaded.params.tensor_views()) check_finite(view, "loaded parameter");
    return loaded;
}

} // namespace seqadapt
