#include "jlp/sim/design_io.hpp"

#include <fstream>
#include <sstream>

#include "jlp/model/parameters.hpp"

namespace jlp {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_numbers(const std::string& s, int line_no) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad number '" +
                        tok + "'");
    }
  }
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

}  // namespace

SimDesign parse_sim_design_text(const std::string& text) {
  // split into the model-spec part and the simulation/truth part
  std::istringstream is(text);
  std::string line, spec_text;
  struct Entry {
    std::string section, object, key, value;
    int line_no = 0;
  };
  std::vector<Entry> entries;
  std::string section, object;
  bool ours = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string stripped = line;
    if (const auto c = stripped.find('#'); c != std::string::npos)
      stripped = stripped.substr(0, c);
    const std::string t = trim(stripped);
    if (!t.empty() && t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unterminated section header");
      const std::string inner = trim(t.substr(1, t.size() - 2));
      if (inner == "simulation" || inner == "truth" ||
          inner.rfind("truth.", 0) == 0) {
        ours = true;
        if (inner == "simulation") {
          section = "simulation";
          object.clear();
        } else if (inner == "truth") {
          section = "truth";
          object.clear();
        } else {
          std::istringstream hs(inner.substr(6));
          std::string kind, name;
          hs >> kind;
          std::getline(hs, name);
          name = trim(name);
          if ((kind != "marker" && kind != "cause") || name.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected [truth.marker NAME] or [truth.cause NAME]");
          section = "truth." + kind;
          object = name;
        }
        continue;
      }
      ours = false;
    }
    if (!ours) {
      spec_text += line;
      spec_text += '\n';
      continue;
    }
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    entries.push_back(
        {section, object, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no});
  }

  SimDesign d;
  d.spec = parse_model_spec_text(spec_text);
  d.truth = make_default_params(d.spec);
  const int q = d.spec.q();
  bool seen_sim = false, seen_truth = false;

  auto parse_bool = [](const Entry& e) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError("line " + std::to_string(e.line_no) + ": expected true/false");
  };

  for (const auto& e : entries) {
    if (e.section == "simulation") {
      seen_sim = true;
      if (e.key == "subjects")
        d.n_subjects = static_cast<int>(parse_numbers(e.value, e.line_no).at(0));
      else if (e.key == "replicates")
        d.replicates = static_cast<int>(parse_numbers(e.value, e.line_no).at(0));
      else if (e.key == "seed")
        d.master_seed = static_cast<std::uint64_t>(
            parse_numbers(e.value, e.line_no).at(0));
      else if (e.key == "horizon")
        d.horizon = parse_numbers(e.value, e.line_no).at(0);
      else if (e.key == "spacing")
        d.visit_spacing = parse_numbers(e.value, e.line_no).at(0);
      else if (e.key == "entry_max")
        d.entry_max = parse_numbers(e.value, e.line_no).at(0);
      else if (e.key == "horizon_from_entry")
        d.horizon_from_entry = parse_bool(e);
      else if (e.key == "grid_anchored_visits")
        d.grid_anchored_visits = parse_bool(e);
      else if (e.key.rfind("covariate ", 0) == 0) {
        CovariateSim cs;
        cs.name = trim(e.key.substr(10));
        std::istringstream vs(e.value);
        std::string kind;
        vs >> kind;
        std::vector<double> args;
        double x;
        while (vs >> x) args.push_back(x);
        if (kind == "bernoulli" && args.size() == 1) {
          cs.kind = CovariateSim::Kind::Bernoulli;
          cs.a = args[0];
        } else if (kind == "uniform" && args.size() == 2) {
          cs.kind = CovariateSim::Kind::Uniform;
          cs.a = args[0];
          cs.b = args[1];
        } else if (kind == "normal" && args.size() == 2) {
          cs.kind = CovariateSim::Kind::Normal;
          cs.a = args[0];
          cs.b = args[1];
        } else {
          throw ConfigError("line " + std::to_string(e.line_no) +
                            ": covariate needs bernoulli p | uniform lo hi | "
                            "normal mean sd");
        }
        d.covariates.push_back(std::move(cs));
      } else {
        throw ConfigError("line " + std::to_string(e.line_no) +
                          ": unknown simulation key '" + e.key + "'");
      }
    } else if (e.section == "truth") {
      seen_truth = true;
      const auto nums = parse_numbers(e.value, e.line_no);
      if (e.key == "beta") {
        if (static_cast<int>(nums.size()) != d.spec.n_fixed())
          throw ConfigError("line " + std::to_string(e.line_no) +
                            ": beta needs one value per fixed term");
        d.truth.beta = to_vector(nums);
      } else if (e.key == "chol") {
        if (static_cast<int>(nums.size()) != q * (q + 1) / 2)
          throw ConfigError("line " + std::to_string(e.line_no) +
                            ": chol needs the lower triangle, row-major");
        d.truth.cholB.setZero(q, q);
        int idx = 0;
        for (int i = 0; i < q; ++i)
          for (int j = 0; j <= i; ++j) d.truth.cholB(i, j) = nums[idx++];
      } else {
        throw ConfigError("line " + std::to_string(e.line_no) +
                          ": unknown truth key '" + e.key + "'");
      }
    } else if (e.section == "truth.marker") {
      seen_truth = true;
      const int k = d.spec.marker_index(e.object);
      const auto nums = parse_numbers(e.value, e.line_no);
      if (e.key == "eta") {
        if (nums.size() != static_cast<std::size_t>(d.truth.markers[k].eta.size()))
          throw ConfigError("line " + std::to_string(e.line_no) +
                            ": eta has the wrong length for marker " + e.object);
        d.truth.markers[k].eta = to_vector(nums);
      } else if (e.key == "sigma") {
        d.truth.markers[k].sigma = nums.at(0);
      } else {
        throw ConfigError("line " + std::to_string(e.line_no) +
                          ": unknown marker truth key '" + e.key + "'");
      }
    } else {  // truth.cause
      seen_truth = true;
      int cidx = -1;
      for (int c = 0; c < d.spec.n_causes(); ++c)
        if (d.spec.causes[c].name == e.object) cidx = c;
      if (cidx < 0)
        throw ConfigError("line " + std::to_string(e.line_no) +
                          ": unknown cause '" + e.object + "'");
      const auto nums = parse_numbers(e.value, e.line_no);
      auto assign = [&](Eigen::VectorXd& dst, const char* what) {
        if (nums.size() != static_cast<std::size_t>(dst.size()))
          throw ConfigError("line " + std::to_string(e.line_no) + ": " + what +
                            " has the wrong length for cause " + e.object);
        dst = to_vector(nums);
      };
      if (e.key == "baseline")
        assign(d.truth.causes[cidx].baseline, "baseline");
      else if (e.key == "beta")
        assign(d.truth.causes[cidx].beta, "beta");
      else if (e.key == "alpha")
        assign(d.truth.causes[cidx].alpha, "alpha");
      else
        throw ConfigError("line " + std::to_string(e.line_no) +
                          ": unknown cause truth key '" + e.key + "'");
    }
  }
  if (!seen_sim && !seen_truth)
    throw ConfigError("design file has no [simulation] or [truth] sections");
  {
    // admissibility of the truth (positivity, threshold order): pack() holds
    // the constraint logic, so round-trip through it once
    ModelSpec bound = d.spec;
    std::vector<std::string> names;
    for (const auto& c : d.covariates) names.push_back(c.name);
    bound.bind_covariates(names);
    ParameterLayout(bound).pack(d.truth);
  }
  return d;
}

SimDesign load_sim_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open design file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_sim_design_text(os.str());
}

}  // namespace jlp
