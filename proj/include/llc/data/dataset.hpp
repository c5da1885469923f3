#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <vector>

#include "llc/io/binary.hpp"
#include "llc/models/model.hpp"
#include "llc/numerics/rng.hpp"

namespace llc {

/// n input/target pairs stored as row-major matrices. Classification targets
/// hold one class index per row.
struct Dataset {
    RowMatrix inputs;
    RowMatrix targets;
    Task task = Task::regression;

    std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }

    void validate() const {
        if (inputs.rows() < 1) throw std::invalid_argument("Dataset: need n >= 1");
        if (inputs.rows() != targets.rows()) throw std::invalid_argument("Dataset: input/target row counts differ");
    }

    void check_compatible(const ModelSpec& spec) const {
        validate();
        if (static_cast<std::size_t>(inputs.cols()) != spec.input_dim() ||
            static_cast<std::size_t>(targets.cols()) != spec.target_dim() || task != spec.task)
            throw std::invalid_argument("Dataset shape does not match the model");
    }
};

/// Inputs i.i.d. uniform on [-input_range, input_range]^{H_0}; targets are the
/// noiseless outputs of the true parameter (class argmax for classification).
inline Dataset gen_realizable(const ModelSpec& spec, std::span<const double> w_true, std::size_t n, Rng& rng,
                              double input_range = 10.0) {
    check_params(spec, w_true);
    if (n < 1) throw std::invalid_argument("gen_realizable: n must be >= 1");
    if (!(input_range > 0.0)) throw std::invalid_argument("gen_realizable: input range must be positive");
    Dataset data;
    data.task = spec.task;
    data.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.input_dim()));
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = rng.uniform(-input_range, input_range);
    Evaluator ev(spec);
    data.targets.resize(data.inputs.rows(), static_cast<Eigen::Index>(spec.target_dim()));
    constexpr Eigen::Index chunk = 8192;
    for (Eigen::Index s = 0; s < data.inputs.rows(); s += chunk) {
        const Eigen::Index len = std::min(chunk, data.inputs.rows() - s);
        const RowMatrix out = ev.forward(w_true, data.inputs.middleRows(s, len));
        if (spec.task == Task::regression) {
            data.targets.middleRows(s, len) = out;
        } else {
            for (Eigen::Index i = 0; i < len; ++i) {
                Eigen::Index k;
                out.row(i).maxCoeff(&k);
                data.targets(s + i, 0) = static_cast<double>(k);
            }
        }
    }
    return data;
}

/// Scale convention for randomly drawn weights.
enum class WeightScale {
    unit,    ///< every entry N(0, 1)
    fan_in,  ///< every entry N(0, 1/H_{j-1})
};

inline WeightScale parse_weight_scale(const std::string& s) {
    if (s == "unit") return WeightScale::unit;
    if (s == "fan_in" || s == "fan-in") return WeightScale::fan_in;
    throw std::invalid_argument("unknown weight scale: " + s);
}
inline std::string to_string(WeightScale s) { return s == WeightScale::unit ? "unit" : "fan_in"; }

inline double weight_sd(WeightScale scale, std::size_t fan_in) {
    return scale == WeightScale::unit ? 1.0 : 1.0 / std::sqrt(static_cast<double>(fan_in));
}

/// Gaussian parameter vector (biases drawn with the same law as weights).
inline std::vector<double> random_parameter(const ModelSpec& spec, Rng& rng, WeightScale scale = WeightScale::unit) {
    std::vector<double> w(spec.param_count());
    for (std::size_t j = 0; j < spec.layer_count(); ++j) {
        const double sd = weight_sd(scale, spec.widths[j]);
        const std::size_t begin = spec.weight_offset(j);
        const std::size_t end = begin + spec.layer_param_count(j);
        for (std::size_t i = begin; i < end; ++i) w[i] = sd * rng.normal();
    }
    return w;
}

struct TrueDln {
    std::vector<double> params;
    std::vector<std::size_t> layer_ranks;  ///< rank imposed on each W_j (full when untouched)
};

/// Random true DLN parameter: Gaussian W_j, each replaced with probability
/// `truncate_prob` by a product of Gaussian factors of random rank
/// r_j ~ U{0..min(H_{j-1}, H_j)}. Entry variance is the same either way.
inline TrueDln random_true_dln(const ModelSpec& spec, Rng& rng, WeightScale scale = WeightScale::unit,
                               double truncate_prob = 0.5) {
    if (spec.kind != ModelKind::dln) throw std::invalid_argument("random_true_dln: DLN spec required");
    TrueDln out;
    out.params.resize(spec.param_count());
    for (std::size_t j = 0; j < spec.layer_count(); ++j) {
        const auto rows = static_cast<Eigen::Index>(spec.widths[j + 1]);
        const auto cols = static_cast<Eigen::Index>(spec.widths[j]);
        const double sd = weight_sd(scale, spec.widths[j]);
        auto W = layer_weight(spec, std::span<double>(out.params), j);
        const std::size_t full = std::min(spec.widths[j], spec.widths[j + 1]);
        if (rng.bernoulli(truncate_prob)) {
            const auto r = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(full)));
            out.layer_ranks.push_back(r);
            if (r == 0) {
                W.setZero();
                continue;
            }
            RowMatrix U(rows, static_cast<Eigen::Index>(r)), V(static_cast<Eigen::Index>(r), cols);
            for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = rng.normal();
            const double vs = sd / std::sqrt(static_cast<double>(r));
            for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = vs * rng.normal();
            W.noalias() = U * V;
        } else {
            out.layer_ranks.push_back(full);
            for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = sd * rng.normal();
        }
    }
    return out;
}

/// End-to-end matrix W_M ... W_1 of a DLN.
inline RowMatrix dln_product(const ModelSpec& spec, std::span<const double> w) {
    check_params(spec, w);
    RowMatrix prod = layer_weight(spec, w, 0);
    for (std::size_t j = 1; j < spec.layer_count(); ++j) prod = (layer_weight(spec, w, j) * prod).eval();
    return prod;
}

/// Numerical rank of the DLN's end-to-end map.
inline std::size_t dln_rank(const ModelSpec& spec, std::span<const double> w) {
    const RowMatrix prod = dln_product(spec, w);
    if (prod.isZero(0.0)) return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(prod);
    const auto& s = svd.singularValues();
    const double tol = s(0) * 1e-9 * static_cast<double>(std::max(prod.rows(), prod.cols()));
    return static_cast<std::size_t>((s.array() > tol).count());
}

/// Shuffle once, then walk the fixed permutation in segments of `batch_size`;
/// the final short segment of an epoch is emitted as-is.
class MinibatchSchedule {
public:
    MinibatchSchedule(std::size_t n, std::size_t batch_size, Rng& rng) : batch_(batch_size) {
        if (n == 0) throw std::invalid_argument("MinibatchSchedule: empty dataset");
        if (batch_size == 0 || batch_size > n) throw std::invalid_argument("MinibatchSchedule: need 1 <= batch size <= n");
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng.engine());
    }

    std::span<const std::size_t> next_batch() {
        if (cursor_ >= order_.size()) cursor_ = 0;
        const std::size_t len = std::min(batch_, order_.size() - cursor_);
        std::span<const std::size_t> out(order_.data() + cursor_, len);
        cursor_ += len;
        return out;
    }

    std::size_t batch_size() const noexcept { return batch_; }
    std::size_t batches_per_epoch() const noexcept { return (order_.size() + batch_ - 1) / batch_; }
    std::span<const std::size_t> permutation() const noexcept { return order_; }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_;
    std::size_t cursor_ = 0;
};

/// Copies the selected rows of `src` into `dst`.
inline void gather_rows(const RowMatrix& src, std::span<const std::size_t> rows, RowMatrix& dst) {
    dst.resize(static_cast<Eigen::Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) dst.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(rows[i]));
}

// Dataset file layout (little-endian), version 1:
//   char[8] "LLCDATA1", u32 version, u32 endianness tag 0x01020304,
//   u8 task (0 regression, 1 classification), u8 float width (8 or 4), u16 reserved,
//   u64 n, u64 input columns H_0, u64 target columns,
//   float[n*H_0] inputs (row-major), float[n*cols] targets (row-major; class
//   indices stored as floats for classification).
inline constexpr char kDatasetMagic[9] = "LLCDATA1";

inline void write_dataset(std::ostream& os, const Dataset& data, std::uint8_t float_width = 8) {
    data.validate();
    io::write_magic(os, kDatasetMagic);
    io::write_le<std::uint32_t>(os, 1);
    io::write_le<std::uint32_t>(os, io::kEndianTag);
    io::write_le<std::uint8_t>(os, data.task == Task::regression ? 0 : 1);
    io::write_le<std::uint8_t>(os, float_width);
    io::write_le<std::uint16_t>(os, 0);
    io::write_le<std::uint64_t>(os, data.size());
    io::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(data.inputs.cols()));
    io::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(data.targets.cols()));
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i) io::write_float(os, data.inputs.data()[i], float_width);
    for (Eigen::Index i = 0; i < data.targets.size(); ++i) io::write_float(os, data.targets.data()[i], float_width);
}

inline Dataset read_dataset(std::istream& is) {
    io::expect_magic(is, kDatasetMagic, "dataset");
    if (io::read_le<std::uint32_t>(is) != 1) throw io::FormatError("unsupported dataset version");
    if (io::read_le<std::uint32_t>(is) != io::kEndianTag) throw io::FormatError("bad endianness tag");
    Dataset data;
    const auto task = io::read_le<std::uint8_t>(is);
    if (task > 1) throw io::FormatError("corrupt dataset header");
    data.task = task == 0 ? Task::regression : Task::classification;
    const auto width = io::read_le<std::uint8_t>(is);
    io::read_le<std::uint16_t>(is);
    const auto n = io::read_le<std::uint64_t>(is);
    const auto in_cols = io::read_le<std::uint64_t>(is);
    const auto out_cols = io::read_le<std::uint64_t>(is);
    if (n == 0 || in_cols == 0 || out_cols == 0 || n > (1ULL << 34) || in_cols > (1ULL << 24) || out_cols > (1ULL << 24))
        throw io::FormatError("corrupt dataset dimensions");
    data.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(in_cols));
    data.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out_cols));
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = io::read_float(is, width);
    for (Eigen::Index i = 0; i < data.targets.size(); ++i) data.targets.data()[i] = io::read_float(is, width);
    return data;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& data, std::uint8_t float_width = 8) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dataset(os, data, float_width);
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dataset " + path.string());
    return read_dataset(is);
}

}  // namespace llc
