#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqlab/errors.hpp"
#include "seqlab/mat.hpp"
#include "seqlab/rng.hpp"

namespace seqlab {

// Named trainable array with a persistent gradient buffer. Gradients
// accumulate across backward calls until zero_grad().
struct Param {
    std::string name;
    Mat value;
    Mat grad;

    Param(std::string n, int rows, int cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

    void zero_grad() { grad.zero(); }
    size_t size() const { return value.size(); }
};

// Owns parameters in creation order; lookup by name. Creation order doubles
// as initialization order, which keeps runs reproducible.
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) = default;
    ParamStore& operator=(ParamStore&&) = default;

    Param& create(const std::string& name, int rows, int cols);
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;

    const std::vector<std::unique_ptr<Param>>& all() const { return items_; }
    size_t scalar_count() const;
    void zero_grads();
    void remove(const std::string& name);

private:
    std::vector<std::unique_ptr<Param>> items_;
    std::unordered_map<std::string, Param*> index_;
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)).
void glorot_init(Mat& m, int fan_in, int fan_out, Rng& rng);

class Tape;

// Handle to one tensor recorded on a Tape.
class Value {
public:
    Value() = default;

    const Mat& data() const;
    const Mat& grad() const;
    int rows() const;
    int cols() const;
    double scalar() const;  // 1x1 only
    bool defined() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Value(Tape* t, int id) : tape_(t), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Ordered record of one forward pass. backward() replays it in reverse,
// visiting every operation exactly once, and flushes leaf gradients into the
// bound Params. clear() resets the tape for the next step.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves.
    Value constant(Mat m);
    Value input(Param& p);                // whole array; one node per param per tape
    Value row_of(Param& table, int row);  // table row as a column vector

    // Primitives.
    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value mul(Value a, Value b);  // elementwise
    Value tanh(Value x);
    Value sigmoid(Value x);
    Value one_minus(Value x);  // 1 - x elementwise
    Value scale(Value x, double c);
    Value concat(Value a, Value b);  // stacks rows; column counts must agree
    Value softmax(Value v);          // column vector, max-subtracted
    Value cross_entropy(Value y, int gold);
    Value sum(Value x);

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Leaf
    // gradients are added into their Params, so gradients accumulate across
    // calls until the params are reset.
    void backward(Value loss);

    void clear();
    size_t size() const { return nodes_.size(); }

private:
    friend class Value;

    enum class Op {
        Constant,
        Input,
        RowOf,
        MatMul,
        Add,
        Mul,
        Tanh,
        Sigmoid,
        OneMinus,
        Scale,
        Concat,
        Softmax,
        CrossEntropy,
        Sum,
    };

    struct Node {
        Mat data;
        Mat grad;
        Op op;
        int in0 = -1;
        int in1 = -1;
        int index = -1;       // gold label / table row
        double factor = 0.0;  // scale constant
        Param* bound = nullptr;
    };

    int push(Node n);
    int check(Value v, const char* op) const;
    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, int> input_cache_;
};

// One LSTM cell's weights: gates i (input), f (forget), o (output) and the
// tanh candidate g. W_* act on the input, U_* on the previous hidden state.
struct LstmWeights {
    Param* Wi = nullptr;
    Param* Ui = nullptr;
    Param* bi = nullptr;
    Param* Wf = nullptr;
    Param* Uf = nullptr;
    Param* bf = nullptr;
    Param* Wo = nullptr;
    Param* Uo = nullptr;
    Param* bo = nullptr;
    Param* Wg = nullptr;
    Param* Ug = nullptr;
    Param* bg = nullptr;

    int input_dim() const { return Wi->value.cols; }
    int hidden_dim() const { return Wi->value.rows; }
};

// Creates the twelve arrays under "<prefix>.". Weights get glorot init,
// biases zeros, except the forget-gate bias which starts at 1.0.
LstmWeights make_lstm(ParamStore& store, const std::string& prefix, int input_dim,
                      int hidden_dim, Rng& rng);

struct LstmState {
    Value h;
    Value c;
};

// i = sig(Wi x + Ui h + bi), f = sig(...), o = sig(...), g = tanh(...)
// c' = f (.) c + i (.) g,  h' = o (.) tanh(c')
LstmState lstm_step(Tape& t, Value x, Value h_prev, Value c_prev, const LstmWeights& w);

// Runs the cell over a sequence from zero initial state; returns the hidden
// state after every step.
std::vector<Value> lstm_run(Tape& t, const std::vector<Value>& xs, const LstmWeights& w);

}  // namespace seqlab
