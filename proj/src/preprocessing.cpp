#include "affectflow/preprocessing.hpp"

#include <sstream>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace affectflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string describe(const PreprocessStep& step) {
  return std::visit(
      overloaded{
          [](const ButterworthStep& s) {
            std::string out = std::string(to_string(s.kind)) + "(order=" + std::to_string(s.order);
            for (double c : s.cutoffs_hz) out += "," + csv::format_double(c) + "Hz";
            return out + ")";
          },
          [](const NotchStep& s) {
            return "notch(" + csv::format_double(s.f0_hz) + "Hz,q=" + csv::format_double(s.q) + ")";
          },
          [](const ResampleStep& s) { return "resample(" + csv::format_double(s.target_fs_hz) + "Hz)"; },
          [](const CustomStep& s) { return "custom(" + s.name + ")"; },
      },
      step);
}

TimeSeries apply_step(const PreprocessStep& step, const TimeSeries& series) {
  return std::visit(
      overloaded{
          [&](const ButterworthStep& s) {
            return apply_zero_phase(design_butterworth(s.kind, s.order, s.cutoffs_hz, series.sample_rate_hz()),
                                    series);
          },
          [&](const NotchStep& s) { return notch_powerline(series, s.f0_hz, s.q); },
          [&](const ResampleStep& s) { return resample_series(series, s.target_fs_hz); },
          [&](const CustomStep& s) {
            if (!s.fn) fail(ErrorKind::InvalidArgument, "custom step '" + s.name + "' has no function");
            return s.fn(series);
          },
      },
      step);
}

TimeSeries apply_chain(const PreprocessChain& chain, const TimeSeries& series) {
  TimeSeries out = series;
  for (const auto& step : chain) out = apply_step(step, out);
  return out;
}

PreprocessChain default_chain(const Modality& modality, double fs_hz, const DefaultChainOptions& options) {
  const double nyquist = fs_hz / 2.0;
  PreprocessChain chain;
  auto butter = [&](FilterKind kind, int order, std::vector<double> cutoffs) {
    for (double c : cutoffs) {
      if (!(c < nyquist)) return;
    }
    chain.push_back(ButterworthStep{kind, order, std::move(cutoffs)});
  };
  const std::string& name = modality.name;
  if (name == "ECG") {
    butter(FilterKind::Highpass, 2, {0.5});
    if (options.powerline_hz < nyquist) chain.push_back(NotchStep{options.powerline_hz, options.notch_q});
  } else if (name == "EDA") {
    butter(FilterKind::Lowpass, 4, {5.0});
  } else if (name == "EMG") {
    butter(FilterKind::Highpass, 4, {10.0});
  } else if (name == "RESP") {
    butter(FilterKind::Bandpass, 2, {0.1, 0.35});
  } else if (name == "TEMP") {
    // no default filtering
  } else {
    fail(ErrorKind::UnknownModality, "no default preprocessing chain for modality " + name);
  }
  return chain;
}

SubjectBundle preprocess(const SubjectBundle& bundle, const std::map<std::string, PreprocessChain>& chains,
                         const PreprocessOptions& options) {
  SubjectBundle out;
  std::optional<ErrorKind> first_kind;
  std::ostringstream errors;
  std::size_t error_count = 0;

  for (const auto& [subject, list] : bundle.entries()) {
    for (const auto& series : list) {
      try {
        TimeSeries s = series;
        if (options.resample_rate_hz) s = resample_series(s, *options.resample_rate_hz);
        auto it = chains.find(s.modality().name);
        const PreprocessChain chain =
            it != chains.end() ? it->second : default_chain(s.modality(), s.sample_rate_hz(), options.defaults);
        out.add(apply_chain(chain, s));
      } catch (const Error& e) {
        if (!first_kind) first_kind = e.kind();
        errors << (error_count++ ? "; " : "") << subject << "/" << series.phase() << "/"
               << series.modality().name << ": " << e.what();
      }
    }
  }
  if (first_kind) throw Error(*first_kind, errors.str());
  return out;
}

}  // namespace affectflow
