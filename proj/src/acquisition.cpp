#include "affectflow/acquisition.hpp"

#include <algorithm>
#include <set>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace fs = std::filesystem;

namespace affectflow {

SignalRegistry SignalRegistry::builtin() {
  SignalRegistry r;
  r.add({"ECG", "millivolt", std::nullopt});
  r.add({"EDA", "microsiemens", std::nullopt});
  r.add({"EMG", "millivolt", std::nullopt});
  r.add({"RESP", "percent", std::nullopt});
  r.add({"TEMP", "degree-Celsius", std::nullopt});
  return r;
}

SignalRegistry SignalRegistry::from_file(const fs::path& path) {
  SignalRegistry r = builtin();
  const std::string text = csv::read_file(path.string());
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : csv::lines(text)) {
    ++line_no;
    line = csv::trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto cells = csv::split(line);
    if (cells.size() < 2 || cells.size() > 3) {
      fail(ErrorKind::InvalidArgument, path.string() + ":" + std::to_string(line_no) +
                                           ": expected name,unit,default_sample_rate_hz");
    }
    Modality m{canonical_modality_name(csv::trim(cells[0])), std::string(csv::trim(cells[1])),
               std::nullopt};
    if (m.name.empty() || m.name.find('_') != std::string::npos) {
      fail(ErrorKind::InvalidArgument, path.string() + ":" + std::to_string(line_no) +
                                           ": modality names must be non-empty without '_'");
    }
    if (cells.size() == 3) {
      auto rate_text = csv::trim(cells[2]);
      if (!rate_text.empty() && rate_text != "unspecified") {
        auto rate = csv::parse_double(rate_text);
        if (!rate || !(*rate > 0.0)) {
          fail(ErrorKind::InvalidArgument, path.string() + ":" + std::to_string(line_no) +
                                               ": sample rate must be positive or 'unspecified'");
        }
        m.default_sample_rate_hz = *rate;
      }
    }
    if (!seen.insert(m.name).second) {
      fail(ErrorKind::DuplicateEntry, path.string() + ": modality " + m.name + " listed twice");
    }
    // File entries may refine built-in descriptors.
    r.by_name_[m.name] = std::move(m);
  }
  return r;
}

void SignalRegistry::add(Modality modality) {
  modality.name = canonical_modality_name(modality.name);
  if (by_name_.count(modality.name)) {
    fail(ErrorKind::DuplicateEntry, "modality " + modality.name + " already registered");
  }
  by_name_.emplace(modality.name, std::move(modality));
}

const Modality* SignalRegistry::find(std::string_view name) const {
  auto it = by_name_.find(canonical_modality_name(name));
  return it == by_name_.end() ? nullptr : &it->second;
}

const Modality& SignalRegistry::at(std::string_view name) const {
  const Modality* m = find(name);
  if (!m) fail(ErrorKind::UnknownModality, "modality '" + std::string(name) + "' is not registered");
  return *m;
}

std::vector<Modality> SignalRegistry::modalities() const {
  std::vector<Modality> out;
  for (const auto& [_, m] : by_name_) out.push_back(m);
  return out;
}

std::size_t DatasetIndex::file_count() const {
  std::size_t n = 0;
  for (const auto& [_, files] : subjects) n += files.size();
  return n;
}

fs::path signal_file_path(const fs::path& root, const std::string& subject,
                          const std::string& phase, const std::string& modality) {
  return root / subject / (subject + "_" + phase + "_" + modality + ".csv");
}

fs::path report_file_path(const fs::path& root, const std::string& subject) {
  return root / subject / (subject + "_reports.csv");
}

DatasetIndex scan_dataset(const fs::path& root, const SignalRegistry& registry) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorKind::IOFailure, root.string() + " is not a readable directory");
  }
  DatasetIndex index;
  index.root = root;

  std::vector<fs::path> subject_dirs;
  for (fs::directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_directory(ec)) subject_dirs.push_back(it->path());
  }
  if (ec) fail(ErrorKind::IOFailure, "cannot list " + root.string() + ": " + ec.message());
  std::sort(subject_dirs.begin(), subject_dirs.end());
  if (subject_dirs.empty()) fail(ErrorKind::EmptyDataset, "no subject folders under " + root.string());

  for (const auto& dir : subject_dirs) {
    const std::string subject = dir.filename().string();
    std::vector<fs::path> files;
    for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
      files.push_back(it->path());
    }
    if (ec) fail(ErrorKind::IOFailure, "cannot list " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());

    auto& entries = index.subjects[subject];
    for (const auto& file : files) {
      if (!fs::is_regular_file(file, ec)) {
        index.skipped.push_back({file, "not a regular file"});
        continue;
      }
      const std::string name = file.filename().string();
      if (file.extension() != ".csv") {
        index.skipped.push_back({file, "not a .csv file"});
        continue;
      }
      const std::string stem = file.stem().string();
      const std::string prefix = subject + "_";
      if (stem.rfind(prefix, 0) != 0) {
        index.skipped.push_back({file, "file name does not start with '" + prefix + "'"});
        continue;
      }
      const std::string rest = stem.substr(prefix.size());
      if (rest == "reports") {
        index.report_files[subject] = file;
        continue;
      }
      auto parts = csv::split(rest, '_');
      if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
        index.skipped.push_back({file, "expected {subject}_{phase}_{modality}.csv"});
        continue;
      }
      const Modality* modality = registry.find(parts[1]);
      if (!modality) {
        index.skipped.push_back({file, "unregistered modality '" + std::string(parts[1]) + "'"});
        continue;
      }
      std::string phase(parts[0]);
      for (const auto& e : entries) {
        if (e.phase == phase && e.modality == *modality) {
          fail(ErrorKind::DuplicateEntry, "subject " + subject + " has two files for phase '" +
                                              phase + "' modality " + modality->name + ": " +
                                              e.path.string() + ", " + file.string());
        }
      }
      entries.push_back({std::move(phase), *modality, file});
    }
  }
  return index;
}

TimeSeries parse_csv_signal(std::string_view text, const Modality& modality,
                            const std::string& subject, const std::string& phase) {
  auto all = csv::lines(text);
  std::size_t first = 0;
  while (first < all.size() && csv::trim(all[first]).empty()) ++first;
  if (first == all.size()) fail(ErrorKind::MissingHeader, "timestamp (empty file)");

  auto header = csv::split(all[first]);
  std::optional<std::size_t> t_col, v_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto name = csv::trim(header[c]);
    if (name == "timestamp") t_col = c;
    else if (canonical_modality_name(name) == modality.name) v_col = c;
  }
  if (!t_col) fail(ErrorKind::MissingHeader, "timestamp");
  if (!v_col) fail(ErrorKind::MissingHeader, modality.name);

  std::vector<double> t, v;
  t.reserve(all.size());
  v.reserve(all.size());
  const std::size_t need = std::max(*t_col, *v_col) + 1;
  std::size_t row = 0;
  for (std::size_t i = first + 1; i < all.size(); ++i) {
    if (csv::trim(all[i]).empty()) continue;
    ++row;
    auto cells = csv::split(all[i]);
    if (cells.size() < need) {
      fail(ErrorKind::NonNumericCell, "row " + std::to_string(row) + ": missing cell");
    }
    auto tv = csv::parse_double(cells[*t_col]);
    auto vv = csv::parse_double(cells[*v_col]);
    if (!tv || !vv) {
      fail(ErrorKind::NonNumericCell, "row " + std::to_string(row) + ": '" + std::string(all[i]) + "'");
    }
    t.push_back(*tv);
    v.push_back(*vv);
  }
  TimeSeries series(subject, phase, modality, std::move(t), std::move(v));
  require_valid(series);
  return series;
}

TimeSeries load_csv_signal(const fs::path& path, const Modality& modality,
                           const std::string& subject, const std::string& phase) {
  const std::string text = csv::read_file(path.string());
  try {
    return parse_csv_signal(text, modality, subject, phase);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::string format_csv_signal(const TimeSeries& series) {
  std::string out = "timestamp," + series.modality().name + "\n";
  auto t = series.timestamps();
  auto v = series.values();
  out.reserve(out.size() + t.size() * 24);
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += csv::format_double(t[i]);
    out += ',';
    out += csv::format_double(v[i]);
    out += '\n';
  }
  return out;
}

void write_csv_signal(const TimeSeries& series, const fs::path& path) {
  csv::write_file(path.string(), format_csv_signal(series));
}

void write_bundle(const SubjectBundle& bundle, const fs::path& root) {
  for (const auto& [subject, list] : bundle.entries()) {
    for (const auto& s : list) {
      write_csv_signal(s, signal_file_path(root, subject, s.phase(), s.modality().name));
    }
  }
}

AcquisitionResult acquire(const DatasetIndex& index, std::span<const Modality> signal_types,
                          const AcquisitionOptions& options) {
  if (signal_types.empty()) fail(ErrorKind::InvalidArgument, "acquire: no signal types requested");
  if (index.subjects.empty()) fail(ErrorKind::EmptyDataset, "no subjects in " + index.root.string());

  auto requested = [&](const Modality& m) {
    return std::find(signal_types.begin(), signal_types.end(), m) != signal_types.end();
  };

  // Phases are taken dataset-wide so a subject missing a whole phase is caught.
  std::vector<std::string> phases;
  for (const auto& [_, files] : index.subjects) {
    for (const auto& f : files) {
      if (requested(f.modality) && std::find(phases.begin(), phases.end(), f.phase) == phases.end()) {
        phases.push_back(f.phase);
      }
    }
  }

  AcquisitionResult result;
  for (const auto& [subject, files] : index.subjects) {
    ExclusionRecord record{subject, {}};
    for (const auto& phase : phases) {
      for (const auto& m : signal_types) {
        bool present = std::any_of(files.begin(), files.end(), [&](const IndexedFile& f) {
          return f.phase == phase && f.modality == m;
        });
        if (!present) record.missing.push_back(phase + "/" + m.name);
      }
    }
    if (!record.missing.empty()) {
      if (options.strict) {
        std::string what;
        for (const auto& m : record.missing) what += (what.empty() ? "" : ", ") + m;
        fail(ErrorKind::ExcludedSubject, "subject " + subject + " is missing " + what);
      }
      result.excluded.push_back(std::move(record));
      continue;
    }
    for (const auto& f : files) {
      if (!requested(f.modality)) continue;
      result.bundle.add(load_csv_signal(f.path, f.modality, subject, f.phase));
    }
  }
  if (result.bundle.empty()) {
    fail(ErrorKind::EmptyDataset, "no complete subjects for the requested signal types");
  }
  return result;
}

}  // namespace affectflow
