#include "disagg/feedforward.hpp"

#include "disagg/errors.hpp"
#include "disagg/log.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

namespace disagg {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::ELU: return "elu";
        case Activation::SELU: return "selu";
        case Activation::Swish: return "swish";
    }
    return "relu";
}

Activation parse_activation(const std::string& text) {
    if (text == "relu") return Activation::ReLU;
    if (text == "tanh") return Activation::Tanh;
    if (text == "elu") return Activation::ELU;
    if (text == "selu") return Activation::SELU;
    if (text == "swish") return Activation::Swish;
    throw std::invalid_argument("unknown activation: " + text);
}

namespace ffn {

namespace {

constexpr double kSeluScale = 1.0507009873554805;
constexpr double kSeluAlpha = 1.6732632423543772;


double act(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::ELU: return z > 0.0 ? z : std::expm1(z);
        case Activation::SELU: return kSeluScale * (z > 0.0 ? z : kSeluAlpha * std::expm1(z));
        case Activation::Swish: return z / (1.0 + std::exp(-z));
    }
    return z;
}

double act_grad(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::ELU: return z > 0.0 ? 1.0 : std::exp(z);
        case Activation::SELU: return kSeluScale * (z > 0.0 ? 1.0 : kSeluAlpha * std::exp(z));
        case Activation::Swish: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s + z * s * (1.0 - s);
        }
    }
    return 1.0;
}

Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& z) {
    return z.unaryExpr([a](double v) { return act(a, v); });
}

Eigen::MatrixXd apply_grad(Activation a, const Eigen::MatrixXd& z) {
    return z.unaryExpr([a](double v) { return act_grad(a, v); });
}

void validate(const NetworkParams& p) {
    if (p.units.empty()) throw std::invalid_argument("feedforward network needs at least one hidden layer");
    for (int u : p.units) {
        if (u < 1) throw std::invalid_argument("hidden layer width must be positive");
    }
    if (!(p.dropout >= 0.0 && p.dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

struct Adam {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;
};

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

Eigen::VectorXd predict(const NetworkState& net, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd h = x;
    const std::size_t n_layers = net.weights.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = (h * net.weights[l]).rowwise() + net.biases[l].transpose();
        h = (l + 1 < n_layers) ? apply(net.params.activation, z) : z;
    }
    return h.col(0);
}

long validation_rows(long n, double fraction) {
    return std::max<long>(1, static_cast<long>(std::floor(fraction * static_cast<double>(n))));
}

NetworkState train(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_val,
                   const Eigen::VectorXd& y_val, const NetworkParams& params, const FeedForwardOptions& opts,
                   std::uint64_t seed) {
    validate(params);
    if (x_train.rows() < 1 || x_val.rows() < 1) throw std::invalid_argument("network training needs fit and validation rows");
    std::mt19937_64 rng(seed);
    NetworkState net;
    net.params = params;
    std::vector<int> widths{static_cast<int>(x_train.cols())};
    widths.insert(widths.end(), params.units.begin(), params.units.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int in = widths[l], out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        Eigen::MatrixXd w(in, out);
        for (long j = 0; j < out; ++j)
            for (long i = 0; i < in; ++i) w(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(out));
    }
    const std::size_t n_layers = net.weights.size();
    Adam adam;
    for (std::size_t l = 0; l < n_layers; ++l) {
        adam.mw.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        adam.vw.push_back(adam.mw.back());
        adam.mb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        adam.vb.push_back(adam.mb.back());
    }

    const double n = static_cast<double>(x_train.rows());
    const double keep = 1.0 - params.dropout;
    NetworkState best = net;
    best.val_mse = mse(predict(net, x_val), y_val);
    best.best_epoch = 0;
    int since_best = 0;
    std::vector<Eigen::MatrixXd> inputs(n_layers), pre(n_layers), masks(n_layers);
    for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        // Forward with inverted dropout on hidden activations.
        Eigen::MatrixXd h = x_train;
        for (std::size_t l = 0; l < n_layers; ++l) {
            inputs[l] = h;
            pre[l] = (h * net.weights[l]).rowwise() + net.biases[l].transpose();
            if (l + 1 < n_layers) {
                h = apply(params.activation, pre[l]);
                if (params.dropout > 0.0) {
                    masks[l].resize(h.rows(), h.cols());
                    for (long j = 0; j < h.cols(); ++j)
                        for (long i = 0; i < h.rows(); ++i) masks[l](i, j) = uniform01(rng) < keep ? 1.0 / keep : 0.0;
                    h = h.cwiseProduct(masks[l]);
                }
            } else {
                h = pre[l];
            }
        }
        const Eigen::VectorXd resid = h.col(0) - y_train;
        const double loss = resid.squaredNorm() / n;
        if (!std::isfinite(loss)) throw NumericalError("network training diverged (non-finite loss)");

        // Backward.
        Eigen::MatrixXd delta = (2.0 / n) * resid;
        ++adam.step;
        const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(adam.step));
        const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(adam.step));
        for (std::size_t li = n_layers; li-- > 0;) {
            const Eigen::MatrixXd gw = inputs[li].transpose() * delta;
            const Eigen::VectorXd gb = delta.colwise().sum().transpose();
            if (li > 0) {
                Eigen::MatrixXd back = delta * net.weights[li].transpose();
                if (params.dropout > 0.0) back = back.cwiseProduct(masks[li - 1]);
                delta = back.cwiseProduct(apply_grad(params.activation, pre[li - 1]));
            }
            adam.mw[li] = opts.beta1 * adam.mw[li] + (1.0 - opts.beta1) * gw;
            adam.vw[li] = opts.beta2 * adam.vw[li] + (1.0 - opts.beta2) * gw.cwiseProduct(gw);
            adam.mb[li] = opts.beta1 * adam.mb[li] + (1.0 - opts.beta1) * gb;
            adam.vb[li] = opts.beta2 * adam.vb[li] + (1.0 - opts.beta2) * gb.cwiseProduct(gb);
            net.weights[li].array() -=
                opts.learning_rate * (adam.mw[li].array() / c1) / ((adam.vw[li].array() / c2).sqrt() + opts.epsilon);
            net.biases[li].array() -=
                opts.learning_rate * (adam.mb[li].array() / c1) / ((adam.vb[li].array() / c2).sqrt() + opts.epsilon);
        }

        const double val = mse(predict(net, x_val), y_val);
        if (!std::isfinite(val)) throw NumericalError("network training diverged (non-finite validation loss)");
        if (val < best.val_mse) {
            best = net;
            best.val_mse = val;
            best.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= opts.patience) {
            break;
        }
    }
    return best;
}

NetworkState fit_fixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetworkParams& params,
                       const FeedForwardOptions& opts, std::uint64_t seed) {
    const long n = x.rows();
    const long n_val = validation_rows(n, opts.validation_fraction);
    if (n - n_val < 2) throw std::invalid_argument("too few rows for a network fit / validation split");
    return train(x.topRows(n - n_val), y.head(n - n_val), x.bottomRows(n_val), y.tail(n_val), params, opts, seed);
}

std::vector<NetworkParams> candidate_architectures(const FeedForwardOptions& opts, std::uint64_t seed) {
    if (opts.trials < 1) throw std::invalid_argument("network search needs at least one trial");
    if (opts.max_layers < 1 || opts.max_layers > 2) throw std::invalid_argument("max_layers must be 1 or 2");
    if (opts.unit_choices.empty() || opts.activations.empty() || opts.dropout_choices.empty()) {
        throw std::invalid_argument("empty network search space");
    }
    static constexpr int bases[] = {2, 3, 5, 7, 11};
    std::mt19937_64 rng(seed);
    double shift[5];
    for (double& s : shift) s = uniform01(rng);
    auto halton = [](long i, int base) {
        double f = 1.0, r = 0.0;
        while (i > 0) {
            f /= base;
            r += f * static_cast<double>(i % base);
            i /= base;
        }
        return r;
    };
    auto pick = [](double u, std::size_t count) {
        return std::min(count - 1, static_cast<std::size_t>(u * static_cast<double>(count)));
    };
    const std::size_t space = static_cast<std::size_t>(opts.max_layers) * opts.unit_choices.size() *
                              (opts.max_layers > 1 ? opts.unit_choices.size() : 1) * opts.activations.size() *
                              opts.dropout_choices.size();
    const std::size_t wanted = std::min<std::size_t>(static_cast<std::size_t>(opts.trials), space);
    std::vector<NetworkParams> out;
    std::set<std::tuple<std::vector<int>, int, double>> seen;
    for (long i = 1; out.size() < wanted && i < 1000L * opts.trials; ++i) {
        double u[5];
        for (int d = 0; d < 5; ++d) u[d] = std::fmod(halton(i, bases[d]) + shift[d], 1.0);
        NetworkParams p;
        const int layers = 1 + static_cast<int>(pick(u[0], static_cast<std::size_t>(opts.max_layers)));
        p.units = {opts.unit_choices[pick(u[1], opts.unit_choices.size())]};
        if (layers == 2) p.units.push_back(opts.unit_choices[pick(u[2], opts.unit_choices.size())]);
        p.activation = opts.activations[pick(u[3], opts.activations.size())];
        p.dropout = opts.dropout_choices[pick(u[4], opts.dropout_choices.size())];
        if (seen.insert({p.units, static_cast<int>(p.activation), p.dropout}).second) out.push_back(std::move(p));
    }
    return out;
}

NetworkState fit_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FeedForwardOptions& opts,
                        std::uint64_t seed) {
    const auto candidates = candidate_architectures(opts, seed);
    NetworkState best;
    bool have = false;
    int diverged = 0;
    auto total_units = [](const NetworkParams& p) {
        int s = 0;
        for (int u : p.units) s += u;
        return s;
    };
    for (std::size_t t = 0; t < candidates.size(); ++t) {
        NetworkState net;
        try {
            net = fit_fixed(x, y, candidates[t], opts, seed + 1000003ULL * (t + 1));
        } catch (const NumericalError& e) {
            ++diverged;
            log::warn("network trial " + std::to_string(t) + " discarded: " + e.what());
            continue;
        }
        if (!have || net.val_mse < best.val_mse ||
            (net.val_mse == best.val_mse && total_units(net.params) < total_units(best.params))) {
            best = std::move(net);
            have = true;
        }
    }
    if (!have) throw NumericalError("every network trial diverged");
    best.trials_run = static_cast<int>(candidates.size());
    best.trials_diverged = diverged;
    return best;
}

}  // namespace ffn

}  // namespace disagg
