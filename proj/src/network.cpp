#include "deltarank/network.hpp"

#include "deltarank/errors.hpp"
#include "deltarank/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace deltarank {

std::string_view to_string(DeltaInput input) noexcept
{
    switch (input) {
    case DeltaInput::full:
        return "full";
    case DeltaInput::no_difference:
        return "no-difference";
    case DeltaInput::no_features:
        return "no-features";
    }
    return "?";
}

DeltaInput delta_input_from_string(std::string_view name)
{
    for (auto v : {DeltaInput::full, DeltaInput::no_difference, DeltaInput::no_features}) {
        if (to_string(v) == name) {
            return v;
        }
    }
    throw std::invalid_argument("unknown delta input variant '" + std::string(name) + "'");
}

std::size_t ModelConfig::input_channels() const noexcept
{
    switch (input) {
    case DeltaInput::full:
        return embedding_dim + 3;
    case DeltaInput::no_difference:
        return 3;
    case DeltaInput::no_features:
        return embedding_dim;
    }
    return 0;
}

void ModelConfig::validate() const
{
    const auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (doc_width == 0 || query_width == 0 || embedding_dim == 0) {
        fail("N, M and V must be positive");
    }
    if (conv_layers == 0) {
        fail("at least one convolution layer is required");
    }
    if (kernel_width % 2 == 0) {
        fail("kernel width must be odd");
    }
    if (stride != 1) {
        fail("only stride 1 is supported");
    }
    if (filters == 0) {
        fail("filters must be >= 1");
    }
    if (hidden.empty() || hidden.back() != 1) {
        fail("the last feed-forward layer must have width 1");
    }
    if (std::any_of(hidden.begin(), hidden.end(), [](std::size_t w) { return w == 0; })) {
        fail("feed-forward widths must be positive");
    }
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
        fail("leaky ReLU slope must lie in (0, 1)");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        fail("dropout must lie in [0, 1)");
    }
    if (lexical_features != 0 && lexical_features != 3 && lexical_features != 18) {
        fail("lexical_features must be 0, 3 or 18");
    }
}

ModelParameters::ModelParameters(const ModelConfig& config) : conv_layers_(config.conv_layers)
{
    config.validate();
    std::size_t channels = config.input_channels();
    for (std::size_t l = 0; l < config.conv_layers; ++l) {
        const std::string prefix = "conv" + std::to_string(l + 1);
        tensors_.push_back({prefix + ".weight",
                            {config.kernel_width, channels, config.filters},
                            std::vector<double>(config.kernel_width * channels * config.filters, 0.0),
                            Stage::convolution,
                            false});
        tensors_.push_back({prefix + ".bias",
                            {config.filters},
                            std::vector<double>(config.filters, 0.0),
                            Stage::convolution,
                            true});
        channels = config.filters;
    }
    std::size_t width = config.ff_input_width();
    for (std::size_t i = 0; i < config.hidden.size(); ++i) {
        const std::string prefix = "ff" + std::to_string(i + 1);
        const std::size_t out = config.hidden[i];
        tensors_.push_back({prefix + ".weight",
                            {width, out},
                            std::vector<double>(width * out, 0.0),
                            Stage::feed_forward,
                            false});
        tensors_.push_back(
            {prefix + ".bias", {out}, std::vector<double>(out, 0.0), Stage::feed_forward, true});
        width = out;
    }
}

Tensor* ModelParameters::find(std::string_view name)
{
    auto it = std::find_if(tensors_.begin(), tensors_.end(), [&](const Tensor& t) { return t.name == name; });
    return it == tensors_.end() ? nullptr : &*it;
}

std::size_t ModelParameters::parameter_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& t : tensors_) {
        n += t.values.size();
    }
    return n;
}

ModelParameters ModelParameters::zeros_like() const
{
    ModelParameters out = *this;
    out.fill(0.0);
    return out;
}

void ModelParameters::fill(double value)
{
    for (auto& t : tensors_) {
        std::fill(t.values.begin(), t.values.end(), value);
    }
}

void ModelParameters::add_scaled(const ModelParameters& other, double scale)
{
    if (other.tensors_.size() != tensors_.size()) {
        throw InvariantError("add_scaled: parameter layouts differ");
    }
    for (std::size_t t = 0; t < tensors_.size(); ++t) {
        auto& dst = tensors_[t].values;
        const auto& src = other.tensors_[t].values;
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] += scale * src[k];
        }
    }
}

bool ModelParameters::all_finite() const noexcept
{
    for (const auto& t : tensors_) {
        for (double v : t.values) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
    }
    return true;
}

ModelParameters init_params(const ModelConfig& config, std::uint64_t seed)
{
    ModelParameters params(config);
    Rng rng(seed);
    const double gain = 6.0 / (1.0 + config.leaky_slope * config.leaky_slope);
    for (auto& t : params.tensors()) {
        if (t.is_bias) {
            continue;
        }
        const std::size_t fan_in = t.stage == Stage::convolution ? t.shape[0] * t.shape[1] : t.shape[0];
        const double bound = std::sqrt(gain / static_cast<double>(fan_in));
        for (double& v : t.values) {
            v = rng.uniform(-bound, bound);
        }
    }
    return params;
}

namespace {

constexpr std::size_t kLanes = 8;
using Lanes = double __attribute__((vector_size(kLanes * sizeof(double))));

Lanes load_lanes(const double* p)
{
    Lanes v;
    std::memcpy(&v, p, sizeof(Lanes));
    return v;
}

constexpr std::ptrdiff_t kTileRows = 4;

// Output rows [i0, i0 + kTileRows) and columns [f0, f0 + width) of a
// same-padded convolution, for rows whose every tap lies inside the text.
// Weights and bias are laid out with `stride` >= f0 + Groups * kLanes columns.
template <std::size_t Groups>
void conv_tile(const Matrix& input, const double* filters, const double* bias, std::size_t stride,
               std::size_t kernel_width, std::ptrdiff_t i0, std::size_t f0, std::size_t width, Matrix& out)
{
    const std::size_t channels = input.cols();
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_width / 2);
    Lanes acc[kTileRows][Groups];
    for (auto& row : acc) {
        for (std::size_t g = 0; g < Groups; ++g) {
            row[g] = load_lanes(bias + f0 + g * kLanes);
        }
    }
    for (std::size_t t = 0; t < kernel_width; ++t) {
        const std::ptrdiff_t r0 = i0 + static_cast<std::ptrdiff_t>(t) - half;
        const double* x[kTileRows];
        for (std::ptrdiff_t b = 0; b < kTileRows; ++b) {
            x[b] = input.row(static_cast<std::size_t>(r0 + b)).data();
        }
        const double* w_tap = filters + t * channels * stride + f0;
        for (std::size_t c = 0; c < channels; ++c) {
            Lanes w[Groups];
            for (std::size_t g = 0; g < Groups; ++g) {
                w[g] = load_lanes(w_tap + c * stride + g * kLanes);
            }
            for (std::ptrdiff_t b = 0; b < kTileRows; ++b) {
                const double xv = x[b][c];
                for (std::size_t g = 0; g < Groups; ++g) {
                    acc[b][g] += xv * w[g];
                }
            }
        }
    }
    for (std::ptrdiff_t b = 0; b < kTileRows; ++b) {
        double* dst = out.row(static_cast<std::size_t>(i0 + b)).data() + f0;
        if (width == Groups * kLanes) {
            std::memcpy(dst, acc[b], sizeof(acc[b]));
        } else {
            double buffer[Groups * kLanes];
            std::memcpy(buffer, acc[b], sizeof(buffer));
            std::copy(buffer, buffer + width, dst);
        }
    }
}

}  // namespace

Matrix conv1d_same(const Matrix& input, std::size_t length, std::span<const double> filters,
                   std::span<const double> bias, std::size_t kernel_width)
{
    const std::size_t channels = input.cols();
    const std::size_t out_channels = bias.size();
    if (kernel_width % 2 == 0 || filters.size() != kernel_width * channels * out_channels ||
        length > input.rows()) {
        throw std::invalid_argument("conv1d_same: inconsistent shapes");
    }
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_width / 2);
    const auto len = static_cast<std::ptrdiff_t>(length);
    Matrix out(input.rows(), out_channels);

    // Interior rows run in register tiles; each output element is summed in
    // the same order as in the scalar loop below.
    const std::ptrdiff_t first = std::min(half, len);
    std::ptrdiff_t tiled_end = first;
    while (tiled_end + kTileRows + half <= len) {
        tiled_end += kTileRows;
    }
    if (tiled_end > first) {
        const std::size_t stride = (out_channels + kLanes - 1) / kLanes * kLanes;
        std::vector<double> padded_w;
        std::vector<double> padded_b;
        const double* w = filters.data();
        const double* b = bias.data();
        if (stride != out_channels) {
            padded_w.assign(kernel_width * channels * stride, 0.0);
            padded_b.assign(stride, 0.0);
            for (std::size_t r = 0; r < kernel_width * channels; ++r) {
                std::copy_n(filters.data() + r * out_channels, out_channels, padded_w.data() + r * stride);
            }
            std::copy(bias.begin(), bias.end(), padded_b.begin());
            w = padded_w.data();
            b = padded_b.data();
        }
        for (std::ptrdiff_t i0 = first; i0 < tiled_end; i0 += kTileRows) {
            std::size_t f0 = 0;
            for (; f0 + 2 * kLanes <= stride; f0 += 2 * kLanes) {
                conv_tile<2>(input, w, b, stride, kernel_width, i0, f0, std::min(2 * kLanes, out_channels - f0), out);
            }
            if (f0 < stride) {
                conv_tile<1>(input, w, b, stride, kernel_width, i0, f0, out_channels - f0, out);
            }
        }
    }

    for (std::ptrdiff_t i = 0; i < len; ++i) {
        if (i >= first && i < tiled_end) {
            continue;
        }
        double* __restrict acc = out.row(static_cast<std::size_t>(i)).data();
        for (std::size_t f = 0; f < out_channels; ++f) {
            acc[f] = bias[f];
        }
        for (std::size_t t = 0; t < kernel_width; ++t) {
            const std::ptrdiff_t r = i + static_cast<std::ptrdiff_t>(t) - half;
            if (r < 0 || r >= len) {
                continue;
            }
            const double* x = input.row(static_cast<std::size_t>(r)).data();
            const double* w_tap = filters.data() + t * channels * out_channels;
            for (std::size_t c = 0; c < channels; ++c) {
                const double xv = x[c];
                const double* __restrict w = w_tap + c * out_channels;
                for (std::size_t f = 0; f < out_channels; ++f) {
                    acc[f] += xv * w[f];
                }
            }
        }
    }
    return out;
}

std::vector<double> masked_max_pool(const Matrix& input, std::size_t length, std::vector<std::size_t>* argmax)
{
    if (length == 0 || length > input.rows()) {
        throw std::invalid_argument("masked_max_pool: no unmasked rows");
    }
    std::vector<double> best(input.row(0).begin(), input.row(0).end());
    std::vector<std::size_t> where(input.cols(), 0);
    for (std::size_t i = 1; i < length; ++i) {
        const auto row = input.row(i);
        for (std::size_t f = 0; f < row.size(); ++f) {
            if (row[f] > best[f]) {
                best[f] = row[f];
                where[f] = i;
            }
        }
    }
    if (argmax != nullptr) {
        *argmax = std::move(where);
    }
    return best;
}

Matrix project_input(const DeltaMatrix& delta, const ModelConfig& config)
{
    const std::size_t dim = delta.embedding_dim();
    if (dim != config.embedding_dim) {
        throw std::invalid_argument("project_input: Delta matrix has V=" + std::to_string(dim) +
                                    ", model expects V=" + std::to_string(config.embedding_dim));
    }
    const std::size_t length = std::min(delta.length, config.doc_width);
    const std::size_t first = config.input == DeltaInput::no_difference ? dim : 0;
    const std::size_t width = config.input_channels();
    Matrix out(length, width);
    for (std::size_t i = 0; i < length; ++i) {
        const auto src = delta.rows.row(i);
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(first),
                  src.begin() + static_cast<std::ptrdiff_t>(first + width), out.row(i).begin());
    }
    return out;
}

double forward(const Matrix& input, std::size_t length, std::span<const double> lex, const ModelParameters& params,
               const ModelConfig& config, Mode mode, std::uint64_t dropout_seed, ForwardCache* cache)
{
    if (length == 0) {
        throw std::invalid_argument("forward: document has no words");
    }
    if (input.cols() != config.input_channels() || input.rows() < length) {
        throw std::invalid_argument("forward: input shape does not match the model");
    }
    if (lex.size() != config.lexical_features) {
        throw std::invalid_argument("forward: expected " + std::to_string(config.lexical_features) +
                                    " lexical features, got " + std::to_string(lex.size()));
    }
    const bool training = mode == Mode::train;
    const double alpha = config.leaky_slope;
    ForwardCache* rec = training ? cache : nullptr;
    if (rec != nullptr) {
        rec->length = length;
        rec->layer_inputs.clear();
        rec->pre_activations.clear();
        rec->dropout_scale.clear();
        rec->ff_inputs.clear();
        rec->ff_pre.clear();
        rec->valid = false;
    }

    Matrix activation;
    const Matrix* layer_input = &input;
    for (std::size_t l = 0; l < config.conv_layers; ++l) {
        Matrix pre = conv1d_same(*layer_input, length, params.conv_weight(l).values,
                                 params.conv_bias(l).values, config.kernel_width);
        Matrix act(length, config.filters);
        for (std::size_t i = 0; i < length; ++i) {
            const auto p = pre.row(i);
            auto a = act.row(i);
            for (std::size_t f = 0; f < config.filters; ++f) {
                a[f] = leaky_relu(p[f], alpha);
            }
        }
        if (rec != nullptr) {
            rec->layer_inputs.push_back(l == 0 ? Matrix(input) : std::move(activation));
            rec->pre_activations.push_back(std::move(pre));
        }
        activation = std::move(act);
        layer_input = &activation;
    }

    if (training && config.dropout > 0.0) {
        Rng rng(dropout_seed);
        const double keep_scale = 1.0 / (1.0 - config.dropout);
        std::vector<double> scale(length * config.filters);
        for (double& s : scale) {
            s = rng.bernoulli(config.dropout) ? 0.0 : keep_scale;
        }
        auto values = activation.values();
        for (std::size_t k = 0; k < scale.size(); ++k) {
            values[k] *= scale[k];
        }
        if (rec != nullptr) {
            rec->dropout_scale = std::move(scale);
        }
    }

    std::vector<std::size_t> argmax;
    std::vector<double> z = masked_max_pool(activation, length, &argmax);
    z.insert(z.end(), lex.begin(), lex.end());
    if (rec != nullptr) {
        rec->argmax = std::move(argmax);
    }

    for (std::size_t layer = 0; layer < config.hidden.size(); ++layer) {
        const auto& w = params.ff_weight(layer).values;
        const auto& b = params.ff_bias(layer).values;
        const std::size_t out_width = b.size();
        std::vector<double> a(b.begin(), b.end());
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double zi = z[i];
            const double* row = w.data() + i * out_width;
            for (std::size_t o = 0; o < out_width; ++o) {
                a[o] += zi * row[o];
            }
        }
        std::vector<double> next(out_width);
        for (std::size_t o = 0; o < out_width; ++o) {
            next[o] = leaky_relu(a[o], alpha);
        }
        if (rec != nullptr) {
            rec->ff_inputs.push_back(std::move(z));
            rec->ff_pre.push_back(std::move(a));
        }
        z = std::move(next);
    }
    if (rec != nullptr) {
        rec->valid = true;
    }
    return z.front();
}

double forward(const DeltaMatrix& delta, std::span<const double> lex, const ModelParameters& params,
               const ModelConfig& config, Mode mode, std::uint64_t dropout_seed, ForwardCache* cache)
{
    const Matrix input = project_input(delta, config);
    return forward(input, input.rows(), lex, params, config, mode, dropout_seed, cache);
}

void backward(const ForwardCache& cache, const ModelParameters& params, const ModelConfig& config, double upstream,
              ModelParameters& grads)
{
    if (!cache.valid || cache.pre_activations.size() != config.conv_layers ||
        cache.ff_pre.size() != config.hidden.size()) {
        throw std::invalid_argument("backward: cache is missing or not from a train-mode forward");
    }
    if (upstream == 0.0) {
        return;
    }
    const double alpha = config.leaky_slope;
    const std::size_t length = cache.length;
    const std::size_t filters = config.filters;

    // Feed-forward stage, last layer first.
    std::vector<double> dz = {upstream};
    for (std::size_t layer = config.hidden.size(); layer-- > 0;) {
        const auto& pre = cache.ff_pre[layer];
        const auto& z_in = cache.ff_inputs[layer];
        const std::size_t out_width = pre.size();
        std::vector<double> da(out_width);
        for (std::size_t o = 0; o < out_width; ++o) {
            da[o] = dz[o] * (pre[o] >= 0.0 ? 1.0 : alpha);
        }
        auto& gw = grads.ff_weight(layer).values;
        auto& gb = grads.ff_bias(layer).values;
        const auto& w = params.ff_weight(layer).values;
        std::vector<double> dz_in(z_in.size(), 0.0);
        for (std::size_t i = 0; i < z_in.size(); ++i) {
            double* grow = gw.data() + i * out_width;
            const double* wrow = w.data() + i * out_width;
            double sum = 0.0;
            for (std::size_t o = 0; o < out_width; ++o) {
                grow[o] += z_in[i] * da[o];
                sum += wrow[o] * da[o];
            }
            dz_in[i] = sum;
        }
        for (std::size_t o = 0; o < out_width; ++o) {
            gb[o] += da[o];
        }
        dz = std::move(dz_in);
    }

    // Max-pool routes each pooled gradient to its argmax row; dropout replays its mask.
    Matrix d_act(length, filters);
    for (std::size_t f = 0; f < filters; ++f) {
        const std::size_t row = cache.argmax[f];
        double g = dz[f];
        if (!cache.dropout_scale.empty()) {
            g *= cache.dropout_scale[row * filters + f];
        }
        d_act(row, f) += g;
    }

    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(config.kernel_width / 2);
    const auto len = static_cast<std::ptrdiff_t>(length);
    for (std::size_t l = config.conv_layers; l-- > 0;) {
        const Matrix& pre = cache.pre_activations[l];
        const Matrix& in = cache.layer_inputs[l];
        const std::size_t channels = in.cols();
        Matrix d_pre(length, filters);
        for (std::size_t i = 0; i < length; ++i) {
            for (std::size_t f = 0; f < filters; ++f) {
                d_pre(i, f) = d_act(i, f) * (pre(i, f) >= 0.0 ? 1.0 : alpha);
            }
        }
        auto& gw = grads.conv_weight(l).values;
        auto& gb = grads.conv_bias(l).values;
        const auto& w = params.conv_weight(l).values;
        const bool need_input_grad = l > 0;
        Matrix d_in = need_input_grad ? Matrix(length, channels) : Matrix();
        for (std::ptrdiff_t i = 0; i < len; ++i) {
            const double* g = d_pre.row(static_cast<std::size_t>(i)).data();
            for (std::size_t f = 0; f < filters; ++f) {
                gb[f] += g[f];
            }
            for (std::size_t t = 0; t < config.kernel_width; ++t) {
                const std::ptrdiff_t r = i + static_cast<std::ptrdiff_t>(t) - half;
                if (r < 0 || r >= len) {
                    continue;
                }
                const double* x = in.row(static_cast<std::size_t>(r)).data();
                double* gw_tap = gw.data() + t * channels * filters;
                const double* w_tap = w.data() + t * channels * filters;
                double* dx = need_input_grad ? d_in.row(static_cast<std::size_t>(r)).data() : nullptr;
                for (std::size_t c = 0; c < channels; ++c) {
                    const double xv = x[c];
                    double* __restrict gwc = gw_tap + c * filters;
                    for (std::size_t f = 0; f < filters; ++f) {
                        gwc[f] += xv * g[f];
                    }
                    if (dx != nullptr) {
                        const double* wc = w_tap + c * filters;
                        double sum = 0.0;
                        for (std::size_t f = 0; f < filters; ++f) {
                            sum += wc[f] * g[f];
                        }
                        dx[c] += sum;
                    }
                }
            }
        }
        if (need_input_grad) {
            d_act = std::move(d_in);
        }
    }
}

ModelParameters backward(const ForwardCache& cache, const ModelParameters& params, const ModelConfig& config,
                         double upstream)
{
    ModelParameters grads = params.zeros_like();
    backward(cache, params, config, upstream, grads);
    return grads;
}

}  // namespace deltarank
