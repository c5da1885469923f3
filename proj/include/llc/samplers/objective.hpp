#pragma once

#include <concepts>
#include <memory>
#include <span>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/models/model.hpp"
#include "llc/theory/potential.hpp"

namespace llc {

/// A per-sample average loss L over `row_count()` data rows, tempered with a
/// sample size `sample_size()` (the n of n*beta). Objectives own scratch state,
/// so each chain works on its own copy.
template <class T>
concept Objective = std::copy_constructible<T> &&
    requires(T& obj, const T& cobj, std::span<const double> w, std::span<double> g, std::span<const std::size_t> rows) {
        { cobj.dimension() } -> std::convertible_to<std::size_t>;
        { cobj.sample_size() } -> std::convertible_to<std::size_t>;
        { cobj.row_count() } -> std::convertible_to<std::size_t>;
        { obj.batch_loss(w, rows) } -> std::convertible_to<double>;
        { obj.batch_loss_grad(w, rows, g) } -> std::convertible_to<double>;
        { obj.full_loss(w) } -> std::convertible_to<double>;
        { obj.full_loss_grad(w, g) } -> std::convertible_to<double>;
    };

/// Negative log-likelihood of a network on a shared, immutable dataset.
class ModelObjective {
public:
    ModelObjective(ModelSpec spec, std::shared_ptr<const Dataset> data)
        : spec_(std::move(spec)), data_(std::move(data)), eval_(spec_) {
        data_->check_compatible(spec_);
    }

    std::size_t dimension() const { return spec_.param_count(); }
    std::size_t sample_size() const { return data_->size(); }
    std::size_t row_count() const { return data_->size(); }
    const ModelSpec& spec() const { return spec_; }
    const Dataset& data() const { return *data_; }

    double batch_loss(std::span<const double> w, std::span<const std::size_t> rows) {
        gather(rows);
        return eval_.loss(w, x_, y_);
    }

    double batch_loss_grad(std::span<const double> w, std::span<const std::size_t> rows, std::span<double> g) {
        gather(rows);
        return eval_.loss_grad(w, x_, y_, g);
    }

    double full_loss(std::span<const double> w) { return eval_.chunked_loss(w, data_->inputs, data_->targets); }

    double full_loss_grad(std::span<const double> w, std::span<double> g) {
        return eval_.chunked_loss_grad(w, data_->inputs, data_->targets, g);
    }

private:
    void gather(std::span<const std::size_t> rows) {
        gather_rows(data_->inputs, rows, x_);
        gather_rows(data_->targets, rows, y_);
    }

    ModelSpec spec_;
    std::shared_ptr<const Dataset> data_;
    Evaluator eval_;
    RowMatrix x_, y_;
};

/// Analytic potential standing in for L_n, with a nominal sample size n.
/// There is no data, so minibatch and full-batch evaluations coincide.
class PotentialObjective {
public:
    PotentialObjective(Potential potential, std::size_t n) : potential_(std::move(potential)), n_(n) {
        if (n_ < 2) throw std::invalid_argument("PotentialObjective: n must be >= 2");
    }

    std::size_t dimension() const { return potential_.dim; }
    std::size_t sample_size() const { return n_; }
    std::size_t row_count() const { return 1; }
    const Potential& potential() const { return potential_; }

    double batch_loss(std::span<const double> w, std::span<const std::size_t>) { return potential_(w); }
    double batch_loss_grad(std::span<const double> w, std::span<const std::size_t>, std::span<double> g) {
        return potential_.value_grad(w, g);
    }
    double full_loss(std::span<const double> w) { return potential_(w); }
    double full_loss_grad(std::span<const double> w, std::span<double> g) { return potential_.value_grad(w, g); }

private:
    Potential potential_;
    std::size_t n_;
};

static_assert(Objective<ModelObjective>);
static_assert(Objective<PotentialObjective>);

}  // namespace llc
