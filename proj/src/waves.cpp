#include "liveia/waves.hpp"

#include "liveia/error.hpp"
#include "liveia/vec2.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace liveia::waves {

void validate(const Waveform& w)
{
    for (std::size_t i = 0; i < w.components.size(); ++i) {
        const auto& c = w.components[i];
        std::ostringstream msg;
        if (!(std::isfinite(c.frequency) && c.frequency > 0.0)) {
            msg << "component " << i << ": frequency must be > 0 (got " << c.frequency << ")";
        } else if (!(std::isfinite(c.amplitude) && c.amplitude >= 0.0)) {
            msg << "component " << i << ": amplitude must be >= 0 (got " << c.amplitude << ")";
        } else if (!(std::isfinite(c.phase) && c.phase >= 0.0 && c.phase < kTwoPi)) {
            msg << "component " << i << ": phase must be in [0, 2pi) (got " << c.phase << ")";
        } else {
            continue;
        }
        throw Error(ErrorCode::Validation, msg.str());
    }
}

double wrap_phase(double radians)
{
    double p = std::fmod(radians, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    // fmod of a value just below a multiple of 2pi can round up to 2pi itself
    if (p >= kTwoPi) p = 0.0;
    return p;
}

Waveform superpose(const Waveform& a, const Waveform& b)
{
    Waveform out;
    out.components.reserve(a.components.size() + b.components.size());
    out.components.insert(out.components.end(), a.components.begin(), a.components.end());
    out.components.insert(out.components.end(), b.components.begin(), b.components.end());
    if (a.label.empty()) {
        out.label = b.label;
    } else if (b.label.empty()) {
        out.label = a.label;
    } else {
        out.label = a.label + "+" + b.label;
    }
    return out;
}

SampledSignal sample(const Waveform& w, double duration, double rate)
{
    if (!(duration > 0.0) || !(rate > 0.0) || !std::isfinite(duration) || !std::isfinite(rate)) {
        throw Error(ErrorCode::Validation, "sample: duration and rate must be positive and finite");
    }
    validate(w);
    for (std::size_t i = 0; i < w.components.size(); ++i) {
        const auto& c = w.components[i];
        if (!(rate > 2.0 * c.frequency)) {
            std::ostringstream msg;
            msg << "sample: component " << i << " (frequency " << c.frequency
                << ") violates Nyquist for rate " << rate;
            throw Error(ErrorCode::Validation, msg.str());
        }
    }
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));
    if (n < 2) {
        throw Error(ErrorCode::Validation, "sample: fewer than two samples requested");
    }

    SampledSignal s;
    s.sample_rate = rate;
    s.samples.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / rate;
        double v = 0.0;
        for (const auto& c : w.components) {
            v += c.amplitude * std::sin(kTwoPi * c.frequency * t + c.phase);
        }
        s.samples[k] = v;
    }
    return s;
}

void fft(std::vector<std::complex<double>>& data)
{
    const std::size_t n = data.size();
    if (n == 0 || !std::has_single_bit(n)) {
        throw Error(ErrorCode::Contract, "fft: size must be a power of two");
    }

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                // Twiddles are evaluated directly rather than by repeated
                // multiplication so on-bin phases stay accurate for long inputs.
                const double ang = -kTwoPi * static_cast<double>(j) / static_cast<double>(len);
                const std::complex<double> w(std::cos(ang), std::sin(ang));
                const auto u = data[i + j];
                const auto v = data[i + j + half] * w;
                data[i + j] = u + v;
                data[i + j + half] = u - v;
            }
        }
    }
}

std::vector<WaveComponent> decompose(const SampledSignal& signal, int max_components, double floor)
{
    const std::size_t n0 = signal.samples.size();
    if (n0 < kMinDecomposeLength) {
        throw Error(ErrorCode::Validation,
                    "decompose: signal too short (" + std::to_string(n0) + " < 64 samples)");
    }
    if (!(floor > 0.0) || max_components < 1 || !(signal.sample_rate > 0.0)) {
        throw Error(ErrorCode::Validation,
                    "decompose: floor and sample_rate must be > 0, max_components >= 1");
    }

    const std::size_t n = std::bit_ceil(n0);
    std::vector<std::complex<double>> spectrum(n);
    for (std::size_t k = 0; k < n0; ++k) spectrum[k] = signal.samples[k];
    fft(spectrum);

    struct Bin {
        std::size_t index;
        double magnitude;
    };
    std::vector<Bin> bins;
    double peak = 0.0;
    // Positive-frequency bins only; DC carries no sinusoid.
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double mag = std::abs(spectrum[k]);
        bins.push_back({k, mag});
        peak = std::max(peak, mag);
    }
    if (peak == 0.0) return {};

    std::vector<WaveComponent> out;
    for (const auto& b : bins) {
        if (b.magnitude < floor * peak) continue;
        const bool nyquist = (b.index == n / 2);
        WaveComponent c;
        c.frequency = static_cast<double>(b.index) * signal.sample_rate / static_cast<double>(n);
        c.amplitude = (nyquist ? 1.0 : 2.0) * b.magnitude / static_cast<double>(n0);
        // A*sin(x + phi) has its positive-frequency coefficient at angle phi - pi/2.
        c.phase = wrap_phase(std::arg(spectrum[b.index]) + kPi / 2.0);
        out.push_back(c);
    }
    std::stable_sort(out.begin(), out.end(), [](const WaveComponent& a, const WaveComponent& b) {
        if (a.amplitude != b.amplitude) return a.amplitude > b.amplitude;
        return a.frequency < b.frequency;
    });
    if (out.size() > static_cast<std::size_t>(max_components)) out.resize(max_components);
    return out;
}

} // namespace liveia::waves
