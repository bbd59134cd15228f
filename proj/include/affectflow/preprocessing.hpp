#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "affectflow/data_model.hpp"
#include "affectflow/filters.hpp"

namespace affectflow {

struct ButterworthStep {
  FilterKind kind = FilterKind::Lowpass;
  int order = 2;
  std::vector<double> cutoffs_hz;
};

struct NotchStep {
  double f0_hz = 50.0;
  double q = 30.0;
};

struct ResampleStep {
  double target_fs_hz = 0.0;
};

/// User-supplied transform. Must be a pure function of its input.
struct CustomStep {
  std::string name;
  std::function<TimeSeries(const TimeSeries&)> fn;
};

using PreprocessStep = std::variant<ButterworthStep, NotchStep, ResampleStep, CustomStep>;
using PreprocessChain = std::vector<PreprocessStep>;

std::string describe(const PreprocessStep& step);
TimeSeries apply_step(const PreprocessStep& step, const TimeSeries& series);
TimeSeries apply_chain(const PreprocessChain& chain, const TimeSeries& series);

struct DefaultChainOptions {
  double powerline_hz = 50.0;
  double notch_q = 30.0;
};

/// ECG: highpass 0.5 Hz (order 2) + powerline notch; EDA: lowpass 5 Hz (order 4);
/// EMG: highpass 10 Hz (order 4); RESP: bandpass 0.1-0.35 Hz (order 2); TEMP: none.
/// Steps whose frequencies are not below fs/2 are left out. Throws
/// UnknownModality for modalities without a default.
PreprocessChain default_chain(const Modality& modality, double fs_hz,
                              const DefaultChainOptions& options = {});

struct PreprocessOptions {
  /// Resample every series to this rate before its chain runs.
  std::optional<double> resample_rate_hz;
  DefaultChainOptions defaults;
};

/// Runs each series through the chain registered for its modality (default
/// chain when absent). Errors from all series are aggregated into one, with
/// subject/phase/modality context; its kind is that of the first failure.
SubjectBundle preprocess(const SubjectBundle& bundle,
                         const std::map<std::string, PreprocessChain>& chains,
                         const PreprocessOptions& options = {});

}  // namespace affectflow
