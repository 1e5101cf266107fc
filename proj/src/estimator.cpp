#include "ppe/estimator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ppe/fft.hpp"
#include "ppe/parallel.hpp"

namespace ppe {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Tx: return "TX";
    case Provenance::Hd: return "HD";
    case Provenance::VirtualHd: return "VIRTUAL-HD";
    case Provenance::HdCorrected: return "HD-corrected";
    case Provenance::Synthetic: return "synthetic";
  }
  return "unknown";
}

double PowerProfileEstimate::imaginary_rms() const {
  if (raw_solution.size() == 0) return 0.0;
  return std::sqrt(raw_solution.imag().squaredNorm() / static_cast<double>(raw_solution.size()));
}

namespace {

std::size_t grid_index(const FiberLink& link, double z_km) {
  const double ratio = z_km / link.dz_km;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 0.0 ||
      rounded >= static_cast<double>(link.position_count())) {
    std::ostringstream msg;
    msg << "perturbation column: z = " << z_km << " km is not on the grid {0, " << link.dz_km
        << ", ..., " << link.total_length_km() - link.dz_km << "}";
    throw std::invalid_argument(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

PerturbationBuilder::PerturbationBuilder(const Waveform& a_ref, const FiberLink& link)
    : link_(link),
      spectrum_(a_ref.samples),
      kernel_(a_ref.size(), a_ref.sample_period, link.beta2_s2_per_km()) {
  a_ref.validate();
  link_.validate();
  fft::forward(spectrum_);
}

void PerturbationBuilder::column_into(double z_km, std::span<Complex> out) const {
  const std::size_t index = grid_index(link_, z_km);
  if (out.size() != spectrum_.size())
    throw std::invalid_argument("PerturbationBuilder: output length mismatch");
  const double z = static_cast<double>(index) * link_.dz_km;
  std::copy(spectrum_.begin(), spectrum_.end(), out.begin());
  kernel_.apply(out, z);
  fft::inverse(out);
  for (auto& s : out) s *= std::norm(s);
  fft::forward(out);
  kernel_.apply(out, link_.total_length_km() - z);
  fft::inverse(out);
  const Complex scale{0.0, link_.dz_km};
  for (auto& s : out) s *= scale;
}

ComplexVector PerturbationBuilder::column(double z_km) const {
  ComplexVector out(spectrum_.size());
  column_into(z_km, out);
  return out;
}

ComplexVector perturbation_column(const Waveform& a_ref, const FiberLink& link, double z_km) {
  return PerturbationBuilder(a_ref, link).column(z_km);
}

std::size_t matrix_bytes(std::size_t samples, const FiberLink& link) {
  return samples * link.position_count() * sizeof(Complex);
}

PerturbationMatrix build_matrix(const Waveform& a_ref, const FiberLink& link,
                                Provenance built_from, const BuildOptions& options) {
  const std::size_t required = matrix_bytes(a_ref.size(), link);
  if (required > options.memory_budget_bytes) {
    std::ostringstream msg;
    msg << "build_matrix: G needs " << required << " bytes, budget is "
        << options.memory_budget_bytes;
    throw MemoryBudgetError(msg.str(), required);
  }
  const PerturbationBuilder builder(a_ref, link);
  PerturbationMatrix g;
  g.positions_km = link.positions_km();
  g.dz_km = link.dz_km;
  g.built_from = built_from;
  const auto rows = static_cast<Eigen::Index>(a_ref.size());
  const auto cols = static_cast<Eigen::Index>(g.positions_km.size());
  g.columns.resize(rows, cols);
  parallel_for(g.positions_km.size(), options.threads, [&](std::size_t c) {
    auto col = g.columns.col(static_cast<Eigen::Index>(c));
    builder.column_into(g.positions_km[c], std::span<Complex>(col.data(), col.size()));
  });
  return g;
}

ComplexVector linear_reference(const Waveform& a_ref, const FiberLink& link) {
  return disperse(a_ref.samples, a_ref.sample_period, link, link.total_length_km());
}

PerturbationVector delta_u(const Waveform& a_l, const Waveform& a_ref, const FiberLink& link,
                           Provenance built_from) {
  if (a_l.size() != a_ref.size()) throw std::invalid_argument("delta_u: length mismatch");
  const auto u = linear_reference(a_ref, link);
  PerturbationVector du;
  du.built_from = built_from;
  du.values.resize(static_cast<Eigen::Index>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k)
    du.values[static_cast<Eigen::Index>(k)] = a_l.samples[k] - u[k];
  return du;
}

LeastSquaresSolver::LeastSquaresSolver(const PerturbationMatrix& g, double max_condition)
    : positions_km_(g.positions_km), built_from_(g.built_from) {
  if (g.rows() < g.cols())
    throw std::invalid_argument("mmse_solve: G has fewer rows than columns");
  if (!g.columns.allFinite()) throw std::invalid_argument("mmse_solve: G has non-finite entries");
  qr_.compute(g.columns);
  const Eigen::MatrixXcd r =
      qr_.matrixQR().topRows(g.cols()).triangularView<Eigen::Upper>();
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(r);
  const auto& sv = svd.singularValues();
  const double smallest = sv.size() ? sv(sv.size() - 1) : 0.0;
  condition_ = smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition)) {
    std::ostringstream msg;
    msg << "mmse_solve: G is numerically rank deficient (condition " << condition_
        << " > " << max_condition << "); the inversion is ill-posed at this spatial step";
    throw ConditioningError(msg.str(), condition_);
  }
}

Eigen::VectorXcd LeastSquaresSolver::solve(const Eigen::VectorXcd& rhs) const {
  if (rhs.size() != qr_.rows()) throw std::invalid_argument("mmse_solve: dU length != rows of G");
  return qr_.solve(rhs);
}

namespace {

bool compatible(Provenance matrix, Provenance vector) {
  if (matrix == Provenance::Synthetic || vector == Provenance::Synthetic) return true;
  if (matrix == Provenance::Tx) return vector == Provenance::Tx;
  if (matrix == Provenance::Hd) return vector == Provenance::Hd || vector == Provenance::VirtualHd;
  return false;
}

}  // namespace

PowerProfileEstimate make_estimate(std::vector<double> positions_km, Eigen::VectorXcd solution,
                                   Provenance built_from) {
  PowerProfileEstimate est;
  est.positions_km = std::move(positions_km);
  est.gamma_prime_hat.resize(static_cast<std::size_t>(solution.size()));
  for (Eigen::Index k = 0; k < solution.size(); ++k)
    est.gamma_prime_hat[static_cast<std::size_t>(k)] = solution[k].real();
  est.raw_solution = std::move(solution);
  est.built_from = built_from;
  return est;
}

PowerProfileEstimate mmse_solve(const LeastSquaresSolver& solver, const PerturbationVector& du) {
  if (!compatible(solver.built_from(), du.built_from)) {
    std::ostringstream msg;
    msg << "mmse_solve: " << to_string(du.built_from) << " perturbation vector paired with "
        << to_string(solver.built_from()) << " matrix";
    throw std::invalid_argument(msg.str());
  }
  return make_estimate(solver.positions_km(), solver.solve(du.values),
                       du.built_from == Provenance::Synthetic ? solver.built_from()
                                                              : du.built_from);
}

PowerProfileEstimate mmse_solve(const PerturbationMatrix& g, const PerturbationVector& du) {
  return mmse_solve(LeastSquaresSolver(g), du);
}

namespace {

void write_complex64(std::ofstream& out, const Complex* data, std::size_t count) {
  std::vector<char> buffer(count * 8);
  for (std::size_t k = 0; k < count; ++k) {
    const float parts[2] = {static_cast<float>(data[k].real()), static_cast<float>(data[k].imag())};
    for (int p = 0; p < 2; ++p) {
      auto bits = std::bit_cast<std::uint32_t>(parts[p]);
      for (int b = 0; b < 4; ++b)
        buffer[k * 8 + static_cast<std::size_t>(p) * 4 + static_cast<std::size_t>(b)] =
            static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

}  // namespace

void dump_system(const std::filesystem::path& stem, const PerturbationMatrix& g,
                 const PerturbationVector& du) {
  if (du.values.size() != g.rows()) throw std::invalid_argument("dump_system: dU length != rows");
  auto with_suffix = [&](const char* suffix) {
    auto p = stem;
    p += suffix;
    return p;
  };
  std::ofstream gbin(with_suffix(".G.bin"), std::ios::binary);
  std::ofstream ubin(with_suffix(".dU.bin"), std::ios::binary);
  std::ofstream meta(with_suffix(".json"));
  if (!gbin || !ubin || !meta) throw std::runtime_error("dump_system: cannot open output files");
  write_complex64(gbin, g.columns.data(), static_cast<std::size_t>(g.columns.size()));
  write_complex64(ubin, du.values.data(), static_cast<std::size_t>(du.values.size()));
  nlohmann::json j;
  j["rows"] = g.rows();
  j["cols"] = g.cols();
  j["dz_km"] = g.dz_km;
  j["positions_km"] = g.positions_km;
  j["matrix_provenance"] = std::string(to_string(g.built_from));
  j["vector_provenance"] = std::string(to_string(du.built_from));
  j["element"] = "complex64: float32 real, float32 imag, little-endian";
  j["matrix_order"] = "column-major";
  j["files"] = {with_suffix(".G.bin").filename().string(),
                with_suffix(".dU.bin").filename().string()};
  meta << j.dump(2) << '\n';
}

}  // namespace ppe
