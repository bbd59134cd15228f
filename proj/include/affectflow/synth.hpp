#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "affectflow/data_model.hpp"

namespace affectflow {

/// Seeded normal/uniform source with platform-independent output (the
/// standard distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                // [0, 1)
  double uniform(double lo, double hi);
  double normal();                 // N(0, 1), Box-Muller

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Mixes several words into one seed (splitmix64 finalizer chain).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

struct EcgSynth {
  double hr_bpm = 70.0;
  double rmssd_target_s = 0.04;
  double noise_snr_db = 30.0;
  double fs_hz = 250.0;
};

struct EdaSynth {
  double scl_baseline_us = 5.0;
  double drift_us = 0.2;  // amplitude of a 0.003 Hz tonic drift
  std::vector<double> scr_times_s;
  std::vector<double> scr_amplitudes_us;
  double noise_us = 0.0;
  double fs_hz = 32.0;
};

struct RespSynth {
  double breaths_per_min = 15.0;
  double amplitude = 1.0;
  double inhale_fraction = 0.4;  // share of each cycle spent inhaling
  double noise = 0.01;
  double fs_hz = 32.0;
};

struct EmgSynth {
  /// Relative amplitude per 35 Hz band from 0 to 350 Hz; empty means white.
  std::vector<double> band_profile;
  double amplitude_mv = 0.05;
  double fs_hz = 1000.0;
};

struct TempSynth {
  double baseline_c = 33.0;
  double slope_c_per_min = 0.0;
  double noise_c = 0.01;
  double fs_hz = 4.0;
};

struct SynthSpec {
  std::string subject_id = "S1";
  std::string phase = "rest";
  double duration_s = 300.0;
  std::uint64_t seed = 0;
  EcgSynth ecg;
  EdaSynth eda;
  RespSynth resp;
  EmgSynth emg;
  TempSynth temp;
  std::optional<int> class_label;
};

struct GroundTruth {
  std::vector<double> beat_times_s;
  std::vector<double> scr_times_s;
  std::size_t scr_count = 0;
  std::size_t breath_count = 0;
  std::optional<int> class_label;
};

struct SynthSignal {
  TimeSeries series;
  GroundTruth truth;
};

/// Gaussian P-QRS-T template per beat. Intervals are 60/hr plus zero-mean
/// white jitter rescaled so the RMSSD of the emitted intervals hits the
/// target; the first beat sits half an interval after t = 0. Throws
/// InvalidRate unless 30 <= hr <= 220 and the rates/duration are positive.
SynthSignal synth_ecg(const SynthSpec& spec);

/// Baseline plus slow drift plus bi-exponential responses (rise 1 s, decay
/// 4 s) whose peaks equal the requested amplitudes. Throws SCROutOfRange when
/// an onset lies outside [0, duration) or an amplitude is not positive.
SynthSignal synth_eda(const SynthSpec& spec);

/// Breathing trace from trough to crest over inhale_fraction of each cycle.
SynthSignal synth_resp(const SynthSpec& spec);

/// Gaussian noise shaped by the band profile.
SynthSignal synth_emg(const SynthSpec& spec);

SynthSignal synth_temp(const SynthSpec& spec);

/// Dispatches on a canonical modality name; throws UnknownModality.
SynthSignal synth_signal(const SynthSpec& spec, const std::string& modality);

/// Signal recipe relative to rest. "stress": HR +25 BPM, RMSSD halved, SCR
/// rate x4, RESP +4 breaths/min, EMG x1.5, skin temperature falling.
/// "amusement": HR +8 BPM, RMSSD x0.85, SCR rate x2, RESP +2 breaths/min.
/// "rest" and "baseline" leave the SynthSpec unchanged.
struct PhaseRecipe {
  double hr_delta_bpm = 0.0;
  double rmssd_factor = 1.0;
  double scr_rate_factor = 1.0;
  double resp_delta_bpm = 0.0;
  double emg_factor = 1.0;
  double temp_slope_c_per_min = 0.0;
  bool stressed = false;  // drives the questionnaire scores
};

PhaseRecipe phase_recipe(const std::string& name);  // throws InvalidArgument

struct SynthPhase {
  std::string name;
  std::string recipe;  // rest | baseline | stress | amusement
  int class_label = 0;
};

/// A whole dataset: every subject records every phase for every modality.
struct SynthDatasetSpec {
  std::size_t subjects = 4;
  std::string subject_prefix = "S";
  std::vector<SynthPhase> phases{{"rest", "rest", 0}, {"stress", "stress", 1}};
  std::vector<std::string> modalities{"ECG", "EDA"};
  double duration_s = 300.0;
  std::uint64_t seed = 0;

  // Rest-state population means; subjects vary around them.
  double hr_bpm = 68.0;
  double rmssd_s = 0.05;
  double snr_db = 25.0;
  double scl_us = 4.0;
  double scr_per_min = 2.0;
  double scr_amplitude_us = 0.3;
  double breaths_per_min = 14.0;
  double temp_c = 33.5;
  /// Per-subject spread as a fraction of each mean (uniform +-).
  double subject_spread = 0.1;

  std::map<std::string, double> fs_hz{{"ECG", 250.0}, {"EDA", 32.0}, {"EMG", 1000.0},
                                      {"RESP", 32.0},  {"TEMP", 4.0}};
  bool write_reports = true;
};

/// Throws InvalidArgument / InvalidRate on inconsistent specs.
void validate_synth_dataset_spec(const SynthDatasetSpec& spec);

/// The concrete per-signal spec used for one subject (0-based) and phase.
SynthSpec subject_phase_spec(const SynthDatasetSpec& spec, std::size_t subject, std::size_t phase);

struct SynthDatasetResult {
  std::size_t signal_files = 0;
  std::size_t report_files = 0;
  std::filesystem::path manifest;
};

/// Writes `{root}/{subject}/{subject}_{phase}_{MOD}.csv`, per-subject
/// `{subject}_reports.csv` with SUDS and STAI scores consistent with each
/// phase's recipe, and `{root}/manifest.csv` (`subject,phase,modality,key,value`).
SynthDatasetResult synth_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& root);

}  // namespace affectflow
