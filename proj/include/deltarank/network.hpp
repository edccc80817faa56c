#pragma once

#include "deltarank/delta.hpp"
#include "deltarank/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deltarank {

/// Which Delta matrix columns feed the convolutional stage.
enum class DeltaInput {
    full,           // difference vectors and the three Delta features
    no_difference,  // Delta features only
    no_features,    // difference vectors only
};

std::string_view to_string(DeltaInput input) noexcept;
DeltaInput delta_input_from_string(std::string_view name);

struct ModelConfig {
    std::size_t doc_width = 50;       // N, document words kept
    std::size_t query_width = 7;      // M
    std::size_t embedding_dim = 300;  // V
    std::size_t conv_layers = 3;
    std::size_t kernel_width = 3;
    std::size_t stride = 1;
    std::size_t filters = 32;
    /// Feed-forward layer widths; the last must be 1.
    std::vector<std::size_t> hidden = {32, 16, 1};
    double leaky_slope = 0.3;
    double dropout = 0.0;
    /// Lexical match inputs: 0, 3 (Lex3) or 18.
    std::size_t lexical_features = 3;
    DeltaInput input = DeltaInput::full;

    std::size_t input_channels() const noexcept;
    std::size_t ff_input_width() const noexcept { return filters + lexical_features; }
    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

enum class Stage { convolution, feed_forward };

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    Stage stage = Stage::convolution;
    bool is_bias = false;

    bool operator==(const Tensor&) const = default;
};

/// All trainable weights. Tensor order: conv{l}.weight (k x C_in x n_f),
/// conv{l}.bias, then ff{i}.weight (in x out), ff{i}.bias.
class ModelParameters {
public:
    ModelParameters() = default;
    /// Zero-filled parameters with the shapes implied by `config`.
    explicit ModelParameters(const ModelConfig& config);

    std::vector<Tensor>& tensors() noexcept { return tensors_; }
    const std::vector<Tensor>& tensors() const noexcept { return tensors_; }

    const Tensor& conv_weight(std::size_t layer) const { return tensors_[2 * layer]; }
    const Tensor& conv_bias(std::size_t layer) const { return tensors_[2 * layer + 1]; }
    const Tensor& ff_weight(std::size_t layer) const { return tensors_[2 * (conv_layers_ + layer)]; }
    const Tensor& ff_bias(std::size_t layer) const { return tensors_[2 * (conv_layers_ + layer) + 1]; }
    Tensor& conv_weight(std::size_t layer) { return tensors_[2 * layer]; }
    Tensor& conv_bias(std::size_t layer) { return tensors_[2 * layer + 1]; }
    Tensor& ff_weight(std::size_t layer) { return tensors_[2 * (conv_layers_ + layer)]; }
    Tensor& ff_bias(std::size_t layer) { return tensors_[2 * (conv_layers_ + layer) + 1]; }

    Tensor* find(std::string_view name);
    std::size_t parameter_count() const noexcept;

    /// Same shapes, all zeros.
    ModelParameters zeros_like() const;
    void fill(double value);
    /// this += scale * other
    void add_scaled(const ModelParameters& other, double scale);
    bool all_finite() const noexcept;

    bool operator==(const ModelParameters&) const = default;

private:
    std::size_t conv_layers_ = 0;
    std::vector<Tensor> tensors_;
};

/// Fan-in scaled uniform weights (Kaiming bound for leaky ReLU), zero biases.
ModelParameters init_params(const ModelConfig& config, std::uint64_t seed);

inline double leaky_relu(double x, double alpha = 0.3) noexcept { return x >= 0.0 ? x : alpha * x; }

/// 'same' 1-D convolution, stride 1: zero-pads (k-1)/2 rows on each side,
/// applies `filters` (k x C x n_f) plus bias, then zeroes rows at or beyond
/// `length`. Input rows at or beyond `length` are treated as zero.
Matrix conv1d_same(const Matrix& input, std::size_t length, std::span<const double> filters,
                   std::span<const double> bias, std::size_t kernel_width);

/// Column-wise maximum over rows [0, length). Ties resolve to the lowest row.
std::vector<double> masked_max_pool(const Matrix& input, std::size_t length,
                                    std::vector<std::size_t>* argmax = nullptr);

enum class Mode { train, eval };

/// Intermediate values of a train-mode forward pass, enough for an exact backward.
struct ForwardCache {
    std::size_t length = 0;
    std::vector<Matrix> layer_inputs;  // Y^(l-1), rows [0, length)
    std::vector<Matrix> pre_activations;
    std::vector<double> dropout_scale;  // length x n_f, 0 or 1/(1-p); empty without dropout
    std::vector<std::size_t> argmax;
    std::vector<std::vector<double>> ff_inputs;  // Z^(i-1)
    std::vector<std::vector<double>> ff_pre;
    bool valid = false;
};

/// Columns of the Delta matrix selected by `config.input`, unmasked rows only.
Matrix project_input(const DeltaMatrix& delta, const ModelConfig& config);

/// Scores one query/document pair. `input` holds the projected Delta rows
/// (at least `length` rows); `lex` has config.lexical_features entries.
/// Dropout before pooling is active only in train mode; `cache` is filled only
/// in train mode.
double forward(const Matrix& input, std::size_t length, std::span<const double> lex,
               const ModelParameters& params, const ModelConfig& config, Mode mode,
               std::uint64_t dropout_seed = 0, ForwardCache* cache = nullptr);

double forward(const DeltaMatrix& delta, std::span<const double> lex, const ModelParameters& params,
               const ModelConfig& config, Mode mode, std::uint64_t dropout_seed = 0,
               ForwardCache* cache = nullptr);

/// Adds upstream * d(score)/d(params) into `grads`.
void backward(const ForwardCache& cache, const ModelParameters& params, const ModelConfig& config,
              double upstream, ModelParameters& grads);

ModelParameters backward(const ForwardCache& cache, const ModelParameters& params, const ModelConfig& config,
                         double upstream);

}  // namespace deltarank
