#include "jlp/data/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "jlp/errors.hpp"

namespace jlp {

int JointDataset::subject_index(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(subjects.size()); ++i)
    if (subjects[i].id == id) return i;
  return -1;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& file, int row) {
  double v;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e)
    throw ValueOutOfRange(file + " row " + std::to_string(row) +
                          ": cannot parse number '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
  Csv csv;
  std::string line;
  if (!std::getline(in, line))
    throw MissingColumn("'" + path + "' is empty");
  csv.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    csv.rows.push_back(split_csv_line(line));
  }
  return csv;
}

int column_of(const Csv& csv, const std::string& name, const std::string& path) {
  for (int i = 0; i < static_cast<int>(csv.header.size()); ++i)
    if (csv.header[i] == name) return i;
  throw MissingColumn("'" + path + "' is missing required column '" + name + "'");
}

}  // namespace

void validate_dataset(const JointDataset& data, const ModelSpec& spec) {
  const int P = spec.n_causes();
  for (const auto& s : data.subjects) {
    if (s.entry < 0.0)
      throw ValueOutOfRange("subject '" + s.id + "': entry time < 0");
    if (s.time < s.entry)
      throw ValueOutOfRange("subject '" + s.id + "': event time " +
                            format_double(s.time) + " before entry " +
                            format_double(s.entry));
    if (s.cause < 0 || s.cause > P)
      throw ValueOutOfRange("subject '" + s.id + "': cause " +
                            std::to_string(s.cause) + " outside 0.." +
                            std::to_string(P));
    if (s.covariates.size() != data.covariate_names.size())
      throw DimensionMismatch("subject '" + s.id + "': covariate count mismatch");
  }
  for (const auto& o : data.observations) {
    if (o.subject < 0 || o.subject >= static_cast<int>(data.subjects.size()))
      throw UnknownSubject("observation references unknown subject index");
    if (o.marker < 0 || o.marker >= spec.n_markers())
      throw ValueOutOfRange("observation references unknown marker index");
    const auto& subj = data.subjects[o.subject];
    if (o.time > subj.time)
      throw ObservationAfterEvent("subject '" + subj.id + "', marker '" +
                                  spec.markers[o.marker].name +
                                  "': observation at t=" + format_double(o.time) +
                                  " after event time " + format_double(subj.time));
    const auto& mk = spec.markers[o.marker];
    if (mk.type == MarkerType::Ordinal) {
      const double r = std::round(o.value);
      if (std::abs(o.value - r) > 1e-9 || r < 0 || r > mk.max_level())
        throw ValueOutOfRange("subject '" + subj.id + "', marker '" + mk.name +
                              "': ordinal value " + format_double(o.value) +
                              " outside 0.." + std::to_string(mk.max_level()));
    } else {
      if (mk.lower_bound && o.value < *mk.lower_bound)
        throw ValueOutOfRange("subject '" + subj.id + "', marker '" + mk.name +
                              "': value below declared lower bound");
      if (mk.upper_bound && o.value > *mk.upper_bound)
        throw ValueOutOfRange("subject '" + subj.id + "', marker '" + mk.name +
                              "': value above declared upper bound");
    }
  }
}

JointDataset load_joint_dataset(const std::string& longitudinal_path,
                                const std::string& survival_path,
                                const ModelSpec& spec) {
  JointDataset data;
  data.provenance = longitudinal_path + " + " + survival_path;

  const Csv surv = read_csv(survival_path);
  const int c_subj = column_of(surv, "subject", survival_path);
  const int c_entry = column_of(surv, "entry", survival_path);
  const int c_time = column_of(surv, "time", survival_path);
  const int c_cause = column_of(surv, "cause", survival_path);
  std::vector<int> cov_cols;
  for (int i = 0; i < static_cast<int>(surv.header.size()); ++i) {
    if (i == c_subj || i == c_entry || i == c_time || i == c_cause) continue;
    data.covariate_names.push_back(surv.header[i]);
    cov_cols.push_back(i);
  }

  std::unordered_map<std::string, int> index;
  int rowno = 1;
  for (const auto& row : surv.rows) {
    ++rowno;
    if (row.size() != surv.header.size())
      throw ValueOutOfRange(survival_path + " row " + std::to_string(rowno) +
                            ": wrong field count");
    SubjectRecord s;
    s.id = row[c_subj];
    s.entry = parse_double(row[c_entry], survival_path, rowno);
    s.time = parse_double(row[c_time], survival_path, rowno);
    const double cause = parse_double(row[c_cause], survival_path, rowno);
    s.cause = static_cast<int>(std::lround(cause));
    for (int c : cov_cols)
      s.covariates.push_back(parse_double(row[c], survival_path, rowno));
    if (index.count(s.id))
      throw ValueOutOfRange(survival_path + " row " + std::to_string(rowno) +
                            ": duplicate subject '" + s.id + "'");
    index[s.id] = static_cast<int>(data.subjects.size());
    data.subjects.push_back(std::move(s));
  }

  const Csv lng = read_csv(longitudinal_path);
  const int l_subj = column_of(lng, "subject", longitudinal_path);
  const int l_marker = column_of(lng, "marker", longitudinal_path);
  const int l_time = column_of(lng, "time", longitudinal_path);
  const int l_value = column_of(lng, "value", longitudinal_path);
  rowno = 1;
  for (const auto& row : lng.rows) {
    ++rowno;
    if (row.size() != lng.header.size())
      throw ValueOutOfRange(longitudinal_path + " row " + std::to_string(rowno) +
                            ": wrong field count");
    LongitudinalObservation o;
    auto it = index.find(row[l_subj]);
    if (it == index.end())
      throw UnknownSubject(longitudinal_path + " row " + std::to_string(rowno) +
                           ": unknown subject '" + row[l_subj] + "'");
    o.subject = it->second;
    bool found = false;
    for (int k = 0; k < spec.n_markers(); ++k)
      if (spec.markers[k].name == row[l_marker]) {
        o.marker = k;
        found = true;
      }
    if (!found)
      throw ValueOutOfRange(longitudinal_path + " row " + std::to_string(rowno) +
                            ": unknown marker '" + row[l_marker] + "'");
    o.time = parse_double(row[l_time], longitudinal_path, rowno);
    o.value = parse_double(row[l_value], longitudinal_path, rowno);
    data.observations.push_back(o);
  }

  validate_dataset(data, spec);
  return data;
}

void write_joint_dataset(const JointDataset& data,
                         const std::string& longitudinal_path,
                         const std::string& survival_path,
                         const ModelSpec& spec) {
  {
    std::ofstream out(survival_path);
    if (!out) throw ConfigError("cannot write '" + survival_path + "'");
    out << "subject,entry,time,cause";
    for (const auto& n : data.covariate_names) out << "," << n;
    out << "\n";
    for (const auto& s : data.subjects) {
      out << s.id << "," << format_double(s.entry) << "," << format_double(s.time)
          << "," << s.cause;
      for (double c : s.covariates) out << "," << format_double(c);
      out << "\n";
    }
  }
  {
    std::ofstream out(longitudinal_path);
    if (!out) throw ConfigError("cannot write '" + longitudinal_path + "'");
    out << "subject,marker,time,value\n";
    for (const auto& o : data.observations)
      out << data.subjects[o.subject].id << "," << spec.markers[o.marker].name
          << "," << format_double(o.time) << "," << format_double(o.value) << "\n";
  }
}

}  // namespace jlp
