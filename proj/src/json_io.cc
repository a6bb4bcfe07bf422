#include "dcsynth/json_io.h"

#include <fstream>
#include <set>

#include "dcsynth/errors.h"

namespace dcsynth {

namespace {

const Json& Field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "." + key + ": missing field");
  return *it;
}

std::vector<int> IntList(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array");
  std::vector<int> out;
  for (size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number_integer()) {
      throw ValidationError(path + "[" + std::to_string(k) + "]: expected an integer");
    }
    out.push_back(j[k].get<int>());
  }
  return out;
}

int Index(const Json& j, const std::string& path, int n) {
  if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer");
  const int v = j.get<int>();
  if (v < 1 || v > n) {
    throw ValidationError(path + ": index " + std::to_string(v) + " out of range 1.." +
                          std::to_string(n));
  }
  return v - 1;
}

}  // namespace

Json MatToJson(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat MatFromJson(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ValidationError(path + ": expected a non-empty array of rows");
  }
  const size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) {
    throw ValidationError(path + "[0]: expected a non-empty row array");
  }
  const size_t cols = j[0].size();
  Mat m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError(rp + ": expected a row of length " + std::to_string(cols));
    }
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        throw ValidationError(rp + "[" + std::to_string(c) + "]: expected a number");
      }
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Json SystemToJson(const InterconnectedSystem& sys) {
  const BlockPartition& p = sys.partition();
  Json j;
  j["partition"] = {{"n", p.state_sizes()},
                    {"m", p.input_sizes()},
                    {"q", p.disturbance_sizes()}};
  Json subs = Json::array();
  for (const SubsystemModel& s : sys.subsystems()) {
    subs.push_back({{"A", MatToJson(s.a)},
                    {"B", MatToJson(s.b)},
                    {"M", MatToJson(s.m)},
                    {"Q", MatToJson(s.q.matrix())},
                    {"R", MatToJson(s.r.matrix())}});
  }
  j["subsystems"] = std::move(subs);
  Json cps = Json::array();
  for (const CouplingBlock& c : sys.couplings()) {
    cps.push_back({{"i", c.target + 1}, {"j", c.source + 1}, {"Aij", MatToJson(c.a)}});
  }
  j["couplings"] = std::move(cps);
  return j;
}

InterconnectedSystem SystemFromJson(const Json& j) {
  const Json& part = Field(j, "partition", "$");
  const std::vector<int> n = IntList(Field(part, "n", "$.partition"), "$.partition.n");
  const std::vector<int> m = IntList(Field(part, "m", "$.partition"), "$.partition.m");
  std::vector<int> q = n;
  if (part.contains("q")) q = IntList(part["q"], "$.partition.q");
  if (m.size() != n.size() || q.size() != n.size()) {
    throw ValidationError("$.partition: n, m and q must have equal length");
  }
  const Json& subs = Field(j, "subsystems", "$");
  if (!subs.is_array() || subs.size() != n.size()) {
    throw ValidationError("$.subsystems: expected " + std::to_string(n.size()) +
                          " entries");
  }
  const int count = static_cast<int>(n.size());
  std::vector<SubsystemModel> models;
  for (int i = 0; i < count; ++i) {
    const std::string sp = "$.subsystems[" + std::to_string(i) + "]";
    const Json& s = subs[i];
    SubsystemModel model;
    model.a = MatFromJson(Field(s, "A", sp), sp + ".A");
    model.b = MatFromJson(Field(s, "B", sp), sp + ".B");
    model.m = s.contains("M") ? MatFromJson(s["M"], sp + ".M")
                              : Mat(Mat::Identity(n[i], n[i]));
    const Mat qm = MatFromJson(Field(s, "Q", sp), sp + ".Q");
    const Mat rm = MatFromJson(Field(s, "R", sp), sp + ".R");
    if (model.a.rows() != n[i] || model.b.cols() != m[i] || model.m.cols() != q[i]) {
      throw ValidationError(sp + ": block dimensions disagree with the partition");
    }
    if (qm.rows() != qm.cols() || !qm.isApprox(qm.transpose(), 0.0)) {
      throw ValidationError(sp + ".Q: expected a symmetric matrix");
    }
    if (rm.rows() != rm.cols() || !rm.isApprox(rm.transpose(), 0.0)) {
      throw ValidationError(sp + ".R: expected a symmetric matrix");
    }
    model.q = SymMat(qm);
    model.r = SymMat(rm);
    models.push_back(std::move(model));
  }
  std::vector<CouplingBlock> couplings;
  std::set<Edge> coupled;
  if (j.contains("couplings")) {
    const Json& cps = j["couplings"];
    if (!cps.is_array()) throw ValidationError("$.couplings: expected an array");
    for (size_t k = 0; k < cps.size(); ++k) {
      const std::string cp = "$.couplings[" + std::to_string(k) + "]";
      CouplingBlock c;
      c.target = Index(Field(cps[k], "i", cp), cp + ".i", count);
      c.source = Index(Field(cps[k], "j", cp), cp + ".j", count);
      c.a = MatFromJson(Field(cps[k], "Aij", cp), cp + ".Aij");
      if (!coupled.insert({c.target, c.source}).second) {
        throw ValidationError(cp + ": duplicate coupling block");
      }
      couplings.push_back(std::move(c));
    }
  }
  if (j.contains("graph")) {
    // Optional explicit plant graph; must agree with the coupling blocks.
    const Json& edges = Field(j["graph"], "edges", "$.graph");
    if (!edges.is_array()) throw ValidationError("$.graph.edges: expected an array");
    std::set<Edge> declared;
    for (size_t k = 0; k < edges.size(); ++k) {
      const std::string ep = "$.graph.edges[" + std::to_string(k) + "]";
      declared.insert({Index(Field(edges[k], "i", ep), ep + ".i", count),
                       Index(Field(edges[k], "j", ep), ep + ".j", count)});
    }
    for (const Edge& e : coupled) {
      if (!declared.count(e)) {
        throw ValidationError("coupling A_" + std::to_string(e.first + 1) + "," +
                              std::to_string(e.second + 1) +
                              " has no edge in the declared graph");
      }
    }
    for (const Edge& e : declared) {
      if (!coupled.count(e)) {
        throw ValidationError("declared edge (" + std::to_string(e.second + 1) +
                              " -> " + std::to_string(e.first + 1) +
                              ") has no coupling block");
      }
    }
  }
  return InterconnectedSystem(std::move(models), std::move(couplings));
}

Json ControllerToJson(const DecentralizedController& k) {
  Json gains = Json::array();
  for (const Mat& g : k.gains) gains.push_back(MatToJson(g));
  return gains;
}

DecentralizedController ControllerFromJson(const Json& j) {
  const Json& gains = Field(j, "gains", "$");
  if (!gains.is_array()) throw ValidationError("$.gains: expected an array");
  DecentralizedController k;
  for (size_t i = 0; i < gains.size(); ++i) {
    k.gains.push_back(MatFromJson(gains[i], "$.gains[" + std::to_string(i) + "]"));
  }
  return k;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void WriteJsonFile(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << "\n";
}

InterconnectedSystem LoadSystem(const std::string& path) {
  return SystemFromJson(ReadJsonFile(path));
}

void SaveSystem(const InterconnectedSystem& sys, const std::string& path) {
  WriteJsonFile(SystemToJson(sys), path);
}

}  // namespace dcsynth
