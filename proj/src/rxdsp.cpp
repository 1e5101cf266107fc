#include "ppe/rxdsp.hpp"

#include <cmath>
#include <limits>

#include "ppe/fft.hpp"
#include "ppe/operators.hpp"

namespace ppe {

Waveform cdc(const Waveform& wave, const FiberLink& link) {
  return Waveform{disperse(wave.samples, wave.sample_period, link, -link.total_length_km()),
                  wave.sample_period, wave.position_km};
}

ComplexVector matched_filter_downsample(const Waveform& wave, const ShapingConfig& shaping,
                                        long delay_samples) {
  shaping.validate();
  const auto sps = static_cast<std::size_t>(shaping.samples_per_symbol);
  const std::size_t n = wave.size();
  if (n % sps != 0)
    throw std::invalid_argument("matched_filter_downsample: length not a multiple of sps");

  // The RRC is real and even, so the matched filter equals the shaping filter.
  const Waveform filtered = [&] {
    const auto taps =
        rrc_taps(shaping.samples_per_symbol, shaping.rolloff, shaping.filter_span_symbols);
    ComplexVector h(n, Complex{});
    const auto half = static_cast<long>(taps.size() / 2);
    const auto len = static_cast<long>(n);
    for (long k = -half; k <= half; ++k)
      h[static_cast<std::size_t>(((k % len) + len) % len)] +=
          taps[static_cast<std::size_t>(k + half)];
    fft::forward(h);
    ComplexVector x = wave.samples;
    fft::forward(x);
    for (std::size_t k = 0; k < n; ++k) x[k] *= h[k];
    fft::inverse(x);
    return Waveform{std::move(x), wave.sample_period, wave.position_km};
  }();

  ComplexVector out(n / sps);
  const auto len = static_cast<long>(n);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const long pos = ((static_cast<long>(k * sps) + delay_samples) % len + len) % len;
    out[k] = filtered.samples[static_cast<std::size_t>(pos)];
  }
  return out;
}

ComplexVector rotate(std::span<const Complex> symbols, double phase) {
  const Complex r = std::polar(1.0, phase);
  ComplexVector out(symbols.size());
  for (std::size_t k = 0; k < symbols.size(); ++k) out[k] = symbols[k] * r;
  return out;
}

CprResult cpr(std::span<const Complex> symbols, const ConstellationSpec& spec, int test_phases) {
  if (test_phases < 16) throw std::invalid_argument("cpr: need at least 16 test phases");
  double best_phase = 0.0;
  double best_metric = std::numeric_limits<double>::infinity();
  for (int b = 0; b < test_phases; ++b) {
    const double phase = -kPi / 4.0 + (kPi / 2.0) * b / test_phases;
    const Complex r = std::polar(1.0, -phase);
    double metric = 0.0;
    for (const auto& s : symbols) {
      const Complex y = s * r;
      metric += std::norm(y - spec.points[hard_decide(y, spec)]);
    }
    if (metric < best_metric) {
      best_metric = metric;
      best_phase = phase;
    }
  }
  return {rotate(symbols, -best_phase), best_phase};
}

int resolve_quadrant(std::span<const Complex> symbols, std::span<const Complex> reference) {
  if (symbols.size() != reference.size())
    throw std::invalid_argument("resolve_quadrant: length mismatch");
  Complex corr{};
  for (std::size_t k = 0; k < symbols.size(); ++k) corr += std::conj(reference[k]) * symbols[k];
  // Rotating by -k pi/2 multiplies corr by (-j)^k.
  const double candidates[4] = {corr.real(), corr.imag(), -corr.real(), -corr.imag()};
  int best = 0;
  for (int k = 1; k < 4; ++k)
    if (candidates[k] > candidates[best]) best = k;
  return best;
}

References regenerate_references(const SymbolFrame& frame, std::span<const SymbolIndex> decided,
                                 const ShapingConfig& shaping, double p0_dbm) {
  if (!frame.spec) throw std::invalid_argument("regenerate_references: no constellation");
  if (decided.size() != frame.size())
    throw std::invalid_argument("regenerate_references: decided length differs from frame");
  Waveform tx = rrc_shape(frame, shaping);
  const double scale = launch_scale(tx, p0_dbm);
  Waveform hd = rrc_shape(symbol_points(decided, *frame.spec), shaping);
  return {scaled(std::move(tx), scale), scaled(std::move(hd), scale)};
}

double measure_ser(std::span<const SymbolIndex> decided, std::span<const SymbolIndex> truth) {
  if (decided.size() != truth.size()) throw std::invalid_argument("measure_ser: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) errors += decided[k] != truth[k];
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

Decisions decide_frame(const Waveform& received, const SymbolFrame& frame, const FiberLink& link,
                       const ShapingConfig& shaping, double p0_dbm, const ReceiverConfig& rx) {
  if (!frame.spec) throw std::invalid_argument("decide_frame: no constellation");
  const auto& spec = *frame.spec;
  auto symbols = matched_filter_downsample(cdc(received, link), shaping);
  if (symbols.size() != frame.size())
    throw std::invalid_argument("decide_frame: received length does not match the frame");
  // Nominal receive gain: launch power restored by the last amplifier.
  const double gain = 1.0 / std::sqrt(dbm_to_watts(p0_dbm) * shaping.samples_per_symbol);
  for (auto& s : symbols) s *= gain;

  auto recovered = cpr(symbols, spec, rx.cpr_test_phases);
  const auto truth = symbol_points(frame.tx_indices, spec);
  const int quadrant = resolve_quadrant(recovered.symbols, truth);
  const double total_phase = recovered.phase + quadrant * kPi / 2.0;
  const auto aligned = quadrant == 0 ? std::move(recovered.symbols)
                                     : rotate(recovered.symbols, -quadrant * kPi / 2.0);

  Decisions out;
  out.decided = hard_decide(aligned, spec);
  out.measured_ser = measure_ser(out.decided, frame.tx_indices);
  out.cpr_phase = total_phase;
  return out;
}

RxBundle receive(const Waveform& received, const SymbolFrame& frame, const FiberLink& link,
                 const ShapingConfig& shaping, double p0_dbm, const ReceiverConfig& rx) {
  auto decisions = decide_frame(received, frame, link, shaping, p0_dbm, rx);
  auto refs = regenerate_references(frame, decisions.decided, shaping, p0_dbm);
  const double p0 = dbm_to_watts(p0_dbm);
  const double norm = 1.0 / std::sqrt(p0);
  RxBundle bundle;
  bundle.a_l = scaled(received, norm);
  bundle.a_tx0 = scaled(std::move(refs.a_tx0), norm);
  bundle.a_hd0 = scaled(std::move(refs.a_hd0), norm);
  bundle.decided = std::move(decisions.decided);
  bundle.measured_ser = decisions.measured_ser;
  bundle.cpr_phase = decisions.cpr_phase;
  bundle.launch_power_w = p0;
  return bundle;
}

}  // namespace ppe
