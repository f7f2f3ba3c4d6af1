#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lexpred/errors.hpp"

namespace lexpred::ad {

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Dense row-major tensor of 64-bit reals. Rank 0 (shape {}) holds a scalar.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s, double fill = 0.0);
    static Tensor scalar(double v);
    static Tensor from(std::vector<size_t> s, std::vector<double> values);

    size_t size() const { return data.size(); }
    size_t dim(size_t i) const { return shape.at(i); }
    size_t rank() const { return shape.size(); }
    std::string shape_str() const;
    bool finite() const;
};

struct Value {
    size_t id = SIZE_MAX;
};

// Eager reverse-mode tape. Each op runs its forward pass immediately and
// registers a backward closure; backward() replays them in reverse creation
// order. One tape = one computation graph; parameters live outside as plain
// Tensors and enter through leaf().
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value leaf(Tensor t, bool requires_grad = false);
    const Tensor& val(Value v) const { return nodes_.at(v.id).value; }
    const Tensor& grad(Value v) const { return nodes_.at(v.id).grad; }

    // y = x W + b           x:[B,I] W:[I,O] b:[O] -> [B,O]
    Value dense(Value x, Value w, Value b);
    // valid 1-D convolution  x:[B,L,E] w:[C,width*E] b:[C] -> [B,L-width+1,C]
    Value conv1d(Value x, Value w, Value b, size_t width);
    Value relu(Value x);
    // per-channel max over time, gradient to the first argmax  [B,L,C] -> [B,C]
    Value global_max_pool(Value x);
    // standard LSTM cell over the sequence, zero initial state
    //   x:[B,L,I] wx:[I,4H] wh:[H,4H] b:[4H] -> hidden states [B,L,H]
    // gate order in the 4H axis: input, forget, cell candidate, output.
    Value lstm(Value x, Value wx, Value wh, Value b);
    Value reverse_time(Value x);                        // [B,L,F] flipped on L
    Value take_timestep(Value x, size_t t);             // [B,L,F] -> [B,F]
    Value concat_last(const std::vector<Value>& xs);    // rank 2 or 3, last axis
    Value reshape(Value x, std::vector<size_t> shape);
    // rows gathered from an embedding matrix  emb:[V,E] -> [B,L,E]
    Value embedding_rows(Value emb, const std::vector<size_t>& ids, size_t batch, size_t len);
    // additive attention over hidden states  h:[B,L,D] w:[D,A] b:[A] v:[A]
    // context [B,D]; weights [B,L] is a detached copy of the softmax output
    // (gradient flows through context).
    struct Attention {
        Value context;
        Value weights;
    };
    Attention attention(Value h, Value w, Value b, Value v);
    // mean squared error against a constant target  pred:[N] or [N,1] -> scalar
    Value mse(Value pred, const Tensor& target);

    void backward(Value loss);
    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void()> back;
        std::vector<Tensor> saved;  // forward intermediates for backward
    };

    Node& node(Value v) { return nodes_.at(v.id); }
    Tensor& grad_mut(Value v) { return nodes_.at(v.id).grad; }
    Value push(Tensor value, std::initializer_list<Value> parents);

    std::vector<Node> nodes_;
};

// Forward and backward LSTM passes concatenated per timestep: [B,L,2H].
Value bilstm(Tape& tape, Value x, Value wx_f, Value wh_f, Value b_f, Value wx_b, Value wh_b,
             Value b_b);

struct AdamState {
    std::vector<double> m, v;
    long long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update; state grows to match the parameter on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate);

// Central-difference gradient check. `f` rebuilds the graph from leaves (one
// per parameter, in order) and returns the scalar loss Value. Returns
// max_i |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
using GraphFn = std::function<Value(Tape&, const std::vector<Value>&)>;
double grad_check(const GraphFn& f, const std::vector<Tensor>& params, double h = 1e-5);

}  // namespace lexpred::ad
