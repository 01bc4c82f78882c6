#pragma once

#include <complex>
#include <string>
#include <vector>

namespace liveia::waves {

/// One sinusoid: amplitude * sin(2*pi*frequency*t + phase).
struct WaveComponent {
    double frequency{1.0}; ///< cycles per unit of pattern time, > 0
    double amplitude{0.0}; ///< >= 0
    double phase{0.0};     ///< radians in [0, 2*pi)

    friend bool operator==(const WaveComponent&, const WaveComponent&) = default;
};

/// A thought pattern: a labelled superposition of components. An empty
/// component list is the null waveform.
struct Waveform {
    std::vector<WaveComponent> components;
    std::string label;

    bool is_null() const { return components.empty(); }
    friend bool operator==(const Waveform&, const Waveform&) = default;
};

struct SampledSignal {
    std::vector<double> samples;
    double sample_rate{1.0};
};

/// Throws Error(Validation) naming the first offending component.
void validate(const Waveform& w);

/// Wrap any angle into [0, 2*pi).
double wrap_phase(double radians);

Waveform superpose(const Waveform& a, const Waveform& b);

/// Evaluate `w` at k/rate for k in [0, round(duration*rate)).
/// Throws Error(Validation) when rate <= 2*f for some component, or when fewer
/// than two samples would be produced.
SampledSignal sample(const Waveform& w, double duration, double rate);

/// In-place radix-2 FFT (forward: exp(-i...)). Size must be a power of two.
void fft(std::vector<std::complex<double>>& data);

/// Fourier decomposition of a sampled signal into its strongest components.
///
/// Signals shorter than 64 samples are rejected. Lengths that are not a power
/// of two are zero-padded; amplitudes are normalised by the original length.
/// Bins with magnitude below `floor` times the strongest bin are dropped. The
/// result is sorted by amplitude descending, ties by frequency ascending.
/// Only on-bin components are recovered exactly; no window is applied.
std::vector<WaveComponent> decompose(const SampledSignal& signal,
                                     int max_components,
                                     double floor);

inline constexpr std::size_t kMinDecomposeLength = 64;

} // namespace liveia::waves
