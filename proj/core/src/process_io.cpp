#include "psbf/process_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace psbf {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormatTag = "psbf-process/1";

Json vars_to_json(const std::vector<VariableSpec>& vars) {
  Json out = Json::array();
  for (const VariableSpec& v : vars) {
    Json item;
    item["name"] = v.name;
    item["domain"] = v.domain;
    out.push_back(std::move(item));
  }
  return out;
}

Json cpt_to_json(const Cpt& cpt, const std::vector<VariableSpec>& state_vars,
                 const std::vector<VariableSpec>& obs_vars) {
  Json out;
  out["child"] = node_handle(cpt.child, state_vars, obs_vars);
  Json parents = Json::array();
  for (const NodeRef& p : cpt.parents)
    parents.push_back(node_handle(p, state_vars, obs_vars));
  out["parents"] = std::move(parents);
  Json rows = Json::array();
  const std::size_t count = cpt.rows();
  for (std::size_t r = 0; r < count; ++r) {
    Json row = Json::array();
    const double* values = cpt.row(r);
    for (int v = 0; v < cpt.child_domain; ++v) row.push_back(values[v]);
    rows.push_back(std::move(row));
  }
  out["rows"] = std::move(rows);
  return out;
}

void expect_keys(const Json& obj, const std::set<std::string>& allowed,
                 const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      throw ParseError(where + ": unknown field \"" + item.key() + "\"");
  }
  for (const std::string& key : allowed) {
    if (!obj.contains(key))
      throw ParseError(where + ": missing field \"" + key + "\"");
  }
}

std::vector<VariableSpec> parse_vars(const Json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError(where + ": expected an array");
  std::vector<VariableSpec> out;
  std::set<std::string> seen;
  for (const Json& item : arr) {
    expect_keys(item, {"name", "domain"}, where);
    VariableSpec v;
    if (!item["name"].is_string()) throw ParseError(where + ": name must be a string");
    v.name = item["name"].get<std::string>();
    if (v.name.empty() || v.name.find('@') != std::string::npos)
      throw ParseError(where + ": bad variable name \"" + v.name + "\"");
    if (!seen.insert(v.name).second)
      throw ParseError(where + ": duplicate variable \"" + v.name + "\"");
    if (!item["domain"].is_number_integer())
      throw ParseError(where + ": domain must be an integer");
    v.domain = item["domain"].get<int>();
    if (v.domain < 1) throw ParseError(where + ": domain of \"" + v.name + "\" < 1");
    out.push_back(std::move(v));
  }
  return out;
}

struct NameMaps {
  std::map<std::string, int> state;
  std::map<std::string, int> obs;
};

NodeRef parse_handle(const std::string& handle, const NameMaps& names,
                     const std::string& where) {
  const std::size_t at = handle.rfind('@');
  if (at == std::string::npos) {
    const auto it = names.obs.find(handle);
    if (it == names.obs.end())
      throw ParseError(where + ": unknown observation variable \"" + handle + "\"");
    return obs_node(it->second);
  }
  const std::string name = handle.substr(0, at);
  const std::string slice = handle.substr(at + 1);
  const auto it = names.state.find(name);
  if (it == names.state.end())
    throw ParseError(where + ": unknown state variable \"" + name + "\"");
  if (slice == "t") return state_t(it->second);
  if (slice == "t1") return state_t1(it->second);
  throw ParseError(where + ": bad slice suffix in \"" + handle + "\"");
}

int node_domain(const NodeRef& ref, const Process& process) {
  if (ref.kind == NodeKind::obs)
    return process.obs_vars[static_cast<std::size_t>(ref.index)].domain;
  return process.state_vars[static_cast<std::size_t>(ref.index)].domain;
}

Cpt parse_cpt(const Json& item, const Process& process, const NameMaps& names,
              const std::string& where) {
  expect_keys(item, {"child", "parents", "rows"}, where);
  if (!item["child"].is_string()) throw ParseError(where + ": child must be a string");
  Cpt cpt;
  cpt.child = parse_handle(item["child"].get<std::string>(), names, where);
  if (cpt.child.kind == NodeKind::state_t)
    throw ParseError(where + ": child \"" + item["child"].get<std::string>() +
                     "\" is a t-slice node");
  cpt.child_domain = node_domain(cpt.child, process);

  if (!item["parents"].is_array()) throw ParseError(where + ": parents must be an array");
  for (const Json& p : item["parents"]) {
    if (!p.is_string()) throw ParseError(where + ": parent handles must be strings");
    const NodeRef ref = parse_handle(p.get<std::string>(), names, where);
    cpt.parents.push_back(ref);
    cpt.parent_domains.push_back(node_domain(ref, process));
  }

  const Json& rows = item["rows"];
  if (!rows.is_array()) throw ParseError(where + ": rows must be an array");
  const std::size_t expected = cpt.rows();
  if (rows.size() != expected) {
    throw ParseError(where + ": expected " + std::to_string(expected) + " rows, got " +
                     std::to_string(rows.size()));
  }
  cpt.table.reserve(expected * static_cast<std::size_t>(cpt.child_domain));
  for (const Json& row : rows) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(cpt.child_domain))
      throw ParseError(where + ": row width must equal the child domain");
    for (const Json& value : row) {
      if (!value.is_number()) throw ParseError(where + ": probabilities must be numbers");
      cpt.table.push_back(value.get<double>());
    }
  }
  return cpt;
}

}  // namespace

std::string write_process(const Process& process) {
  Json doc;
  doc["format"] = kFormatTag;
  doc["name"] = process.name;
  doc["state_vars"] = vars_to_json(process.state_vars);
  doc["obs_vars"] = vars_to_json(process.obs_vars);

  Json actions = Json::array();
  for (const ActionDbn& a : process.actions) {
    Json action;
    action["name"] = a.name;
    Json edges = Json::array();
    for (const Edge& e : a.edges) {
      Json pair = Json::array();
      pair.push_back(node_handle(e.first, a.state_vars, a.obs_vars));
      pair.push_back(node_handle(e.second, a.state_vars, a.obs_vars));
      edges.push_back(std::move(pair));
    }
    action["edges"] = std::move(edges);
    Json cpts = Json::array();
    for (const Cpt& cpt : a.state_cpts)
      cpts.push_back(cpt_to_json(cpt, a.state_vars, a.obs_vars));
    for (const Cpt& cpt : a.obs_cpts)
      cpts.push_back(cpt_to_json(cpt, a.state_vars, a.obs_vars));
    action["cpts"] = std::move(cpts);
    actions.push_back(std::move(action));
  }
  doc["actions"] = std::move(actions);

  Json clusterings = Json::array();
  for (const NamedClustering& c : process.clusterings) {
    Json entry;
    entry["name"] = c.name;
    Json clusters = Json::array();
    for (const std::vector<int>& members : c.clusters) {
      Json cluster = Json::array();
      for (int v : members)
        cluster.push_back(process.state_vars[static_cast<std::size_t>(v)].name);
      clusters.push_back(std::move(cluster));
    }
    entry["clusters"] = std::move(clusters);
    clusterings.push_back(std::move(entry));
  }
  doc["clusterings"] = std::move(clusterings);

  return doc.dump(2) + "\n";
}

Process parse_process(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("not valid JSON: ") + e.what());
  }
  expect_keys(doc, {"format", "name", "state_vars", "obs_vars", "actions", "clusterings"},
              "process");
  if (!doc["format"].is_string() || doc["format"].get<std::string>() != kFormatTag)
    throw ParseError("unsupported format tag");
  if (!doc["name"].is_string()) throw ParseError("process name must be a string");

  Process process;
  process.name = doc["name"].get<std::string>();
  process.state_vars = parse_vars(doc["state_vars"], "state_vars");
  process.obs_vars = parse_vars(doc["obs_vars"], "obs_vars");

  NameMaps names;
  for (std::size_t i = 0; i < process.state_vars.size(); ++i)
    names.state[process.state_vars[i].name] = static_cast<int>(i);
  for (std::size_t j = 0; j < process.obs_vars.size(); ++j)
    names.obs[process.obs_vars[j].name] = static_cast<int>(j);

  if (!doc["actions"].is_array()) throw ParseError("actions must be an array");
  std::set<std::string> action_names;
  for (const Json& item : doc["actions"]) {
    expect_keys(item, {"name", "edges", "cpts"}, "action");
    ActionDbn a;
    if (!item["name"].is_string()) throw ParseError("action name must be a string");
    a.name = item["name"].get<std::string>();
    if (!action_names.insert(a.name).second)
      throw ParseError("duplicate action \"" + a.name + "\"");
    const std::string where = "action \"" + a.name + "\"";
    a.state_vars = process.state_vars;
    a.obs_vars = process.obs_vars;

    if (!item["edges"].is_array()) throw ParseError(where + ": edges must be an array");
    for (const Json& pair : item["edges"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
          !pair[1].is_string())
        throw ParseError(where + ": each edge must be a two-string array");
      a.edges.emplace_back(parse_handle(pair[0].get<std::string>(), names, where),
                           parse_handle(pair[1].get<std::string>(), names, where));
    }

    if (!item["cpts"].is_array()) throw ParseError(where + ": cpts must be an array");
    a.state_cpts.assign(process.state_vars.size(), Cpt{});
    a.obs_cpts.assign(process.obs_vars.size(), Cpt{});
    std::set<std::pair<int, int>> seen;  // (kind bucket, index)
    for (const Json& centry : item["cpts"]) {
      Cpt cpt = parse_cpt(centry, process, names, where);
      const int bucket = cpt.child.kind == NodeKind::obs ? 1 : 0;
      if (!seen.insert({bucket, cpt.child.index}).second)
        throw ParseError(where + ": duplicate table for one child");
      if (bucket == 1) {
        a.obs_cpts[static_cast<std::size_t>(cpt.child.index)] = std::move(cpt);
      } else {
        a.state_cpts[static_cast<std::size_t>(cpt.child.index)] = std::move(cpt);
      }
    }
    for (std::size_t i = 0; i < a.state_cpts.size(); ++i) {
      if (a.state_cpts[i].child_domain == 0)
        throw ParseError(where + ": missing table for \"" + process.state_vars[i].name +
                         "@t1\"");
    }
    for (std::size_t j = 0; j < a.obs_cpts.size(); ++j) {
      if (a.obs_cpts[j].child_domain == 0)
        throw ParseError(where + ": missing table for \"" + process.obs_vars[j].name +
                         "\"");
    }
    process.actions.push_back(std::move(a));
  }

  if (!doc["clusterings"].is_array()) throw ParseError("clusterings must be an array");
  std::set<std::string> clustering_names;
  for (const Json& item : doc["clusterings"]) {
    expect_keys(item, {"name", "clusters"}, "clustering");
    NamedClustering c;
    if (!item["name"].is_string()) throw ParseError("clustering name must be a string");
    c.name = item["name"].get<std::string>();
    if (!clustering_names.insert(c.name).second)
      throw ParseError("duplicate clustering \"" + c.name + "\"");
    const std::string where = "clustering \"" + c.name + "\"";
    if (!item["clusters"].is_array())
      throw ParseError(where + ": clusters must be an array");
    for (const Json& cluster : item["clusters"]) {
      if (!cluster.is_array()) throw ParseError(where + ": each cluster is an array");
      std::vector<int> members;
      for (const Json& name : cluster) {
        if (!name.is_string()) throw ParseError(where + ": member names are strings");
        const auto it = names.state.find(name.get<std::string>());
        if (it == names.state.end())
          throw ParseError(where + ": unknown state variable \"" +
                           name.get<std::string>() + "\"");
        members.push_back(it->second);
      }
      c.clusters.push_back(std::move(members));
    }
    process.clusterings.push_back(std::move(c));
  }
  return process;
}

void save_process(const Process& process, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open \"" + path + "\" for writing");
  const std::string text = write_process(process);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ParseError("failed writing \"" + path + "\"");
}

Process load_process(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_process(buffer.str());
}

}  // namespace psbf
