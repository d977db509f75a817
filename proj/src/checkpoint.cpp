#include "roomclear/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace roomclear {

namespace {

// Seventeen significant digits round-trip any double exactly.
std::string fmt(double v)
{
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double to_double(std::string const &s)
{
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) { throw CheckpointError("bad number '" + s + "'"); }
  return v;
}

std::int64_t to_int(std::string const &s)
{
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) { throw CheckpointError("bad integer '" + s + "'"); }
  return v;
}

std::string_view kind_name(LearnerSnapshot::Kind k)
{
  switch (k) {
  case LearnerSnapshot::Kind::tabular: return "tabular";
  case LearnerSnapshot::Kind::ddqn: return "ddqn";
  case LearnerSnapshot::Kind::scripted: return "scripted";
  }
  return "?";
}

void write_net(std::ostream &out, Net const &net)
{
  out << "layers " << net.layers() << '\n';
  for (std::size_t l = 0; l < net.layers(); ++l) {
    auto const &w = net.weights()[l];
    auto const &b = net.biases()[l];
    out << "weight " << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) { out << (j ? " " : "") << fmt(w(i, j)); }
      out << '\n';
    }
    out << "bias " << b.size() << '\n';
    for (Eigen::Index i = 0; i < b.size(); ++i) { out << (i ? " " : "") << fmt(b(i)); }
    out << '\n';
  }
}

void write_learner(std::ostream &out, std::string_view role, LearnerSnapshot const &snap)
{
  out << '[' << role << ' ' << kind_name(snap.kind) << "]\n";
  if (snap.kind == LearnerSnapshot::Kind::tabular) {
    auto const &t = snap.tabular.value();
    out << "actions " << t.actions << '\n';
    out << "selections " << t.selections << '\n';
    out << "entries " << t.entries.size() << '\n';
    for (auto const &e : t.entries) {
      out << e.key.size();
      for (auto k : e.key) { out << ' ' << k; }
      out << ' ' << e.action << ' ' << fmt(e.value) << ' ' << e.visits << '\n';
    }
  } else if (snap.kind == LearnerSnapshot::Kind::ddqn) {
    auto const &n = snap.net.value();
    out << "dims";
    for (int d : n.online.dims()) { out << ' ' << d; }
    out << '\n';
    out << "selections " << n.selections << '\n';
    out << "train_steps " << n.train_steps << '\n';
    out << "online\n";
    write_net(out, n.online);
    out << "target\n";
    write_net(out, n.target);
  }
}

class Reader
{
public:
  explicit Reader(std::string const &text) : in_(text) {}

  std::string word()
  {
    std::string w;
    if (!(in_ >> w)) { throw CheckpointError("unexpected end of checkpoint"); }
    return w;
  }
  void expect(std::string const &w)
  {
    auto got = word();
    if (got != w) { throw CheckpointError("expected '" + w + "', got '" + got + "'"); }
  }
  std::int64_t integer() { return to_int(word()); }
  double       number() { return to_double(word()); }
  std::string  line()
  {
    std::string l;
    std::getline(in_ >> std::ws, l);
    return l;
  }
  bool at_end()
  {
    in_ >> std::ws;
    return in_.peek() == std::char_traits<char>::eof();
  }

private:
  std::istringstream in_;
};

Net read_net(Reader &r, std::vector<int> const &dims)
{
  Net  net(dims);
  r.expect("layers");
  auto const layers = r.integer();
  if (layers != static_cast<std::int64_t>(net.layers())) { throw CheckpointError("layer count mismatch"); }
  for (std::size_t l = 0; l < net.layers(); ++l) {
    auto &w = net.weights()[l];
    auto &b = net.biases()[l];
    r.expect("weight");
    if (r.integer() != w.rows() || r.integer() != w.cols()) { throw CheckpointError("weight shape mismatch"); }
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) { w(i, j) = r.number(); }
    }
    r.expect("bias");
    if (r.integer() != b.size()) { throw CheckpointError("bias shape mismatch"); }
    for (Eigen::Index i = 0; i < b.size(); ++i) { b(i) = r.number(); }
  }
  return net;
}

LearnerSnapshot read_learner(Reader &r, std::string const &kind)
{
  LearnerSnapshot snap;
  if (kind == "tabular]") {
    snap.kind = LearnerSnapshot::Kind::tabular;
    TabularSnapshot t;
    r.expect("actions");
    t.actions = static_cast<int>(r.integer());
    r.expect("selections");
    t.selections = r.integer();
    r.expect("entries");
    auto const count = r.integer();
    for (std::int64_t i = 0; i < count; ++i) {
      QTable::Triple e;
      auto const     len = r.integer();
      for (std::int64_t k = 0; k < len; ++k) { e.key.push_back(static_cast<std::int32_t>(r.integer())); }
      e.action = static_cast<int>(r.integer());
      e.value = r.number();
      e.visits = static_cast<int>(r.integer());
      t.entries.push_back(std::move(e));
    }
    snap.tabular = std::move(t);
  } else if (kind == "ddqn]") {
    snap.kind = LearnerSnapshot::Kind::ddqn;
    std::istringstream dims_line(r.line());
    std::string        tag;
    dims_line >> tag;
    if (tag != "dims") { throw CheckpointError("expected dims"); }
    std::vector<int> dims;
    for (int d; dims_line >> d;) { dims.push_back(d); }
    NetSnapshot n;
    r.expect("selections");
    n.selections = r.integer();
    r.expect("train_steps");
    n.train_steps = r.integer();
    r.expect("online");
    n.online = read_net(r, dims);
    r.expect("target");
    n.target = read_net(r, dims);
    snap.net = std::move(n);
  } else if (kind == "scripted]") {
    snap.kind = LearnerSnapshot::Kind::scripted;
  } else {
    throw CheckpointError("unknown learner kind '" + kind + "'");
  }
  return snap;
}

} // namespace

TabularSnapshot snapshot(TabularLearner const &learner)
{
  return {learner.table().actions(), learner.selections(), learner.table().triples()};
}

NetSnapshot snapshot(DdqnLearner const &learner)
{
  return {learner.online(), learner.target(), learner.selections(), learner.train_steps()};
}

void restore(TabularLearner &learner, TabularSnapshot const &snap)
{
  if (snap.actions != learner.table().actions()) { throw CheckpointError("tabular action count mismatch"); }
  learner.table().clear();
  for (auto const &e : snap.entries) { learner.table().restore(e.key, e.action, e.value, e.visits); }
  learner.set_selections(snap.selections);
}

void restore(DdqnLearner &learner, NetSnapshot const &snap)
{
  if (snap.online.dims() != learner.online().dims()) { throw CheckpointError("network shape mismatch"); }
  learner.online() = snap.online;
  learner.target() = snap.target;
  learner.set_counters(snap.selections, snap.train_steps);
}

std::string serialize_checkpoint(Checkpoint const &ckpt)
{
  std::ostringstream out;
  char               hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ckpt.scenario_hash));
  out << "roomclear-checkpoint " << Checkpoint::kVersion << '\n';
  out << "scenario_hash " << hash << '\n';
  out << "algo " << ckpt.algo << '\n';
  out << "episode " << ckpt.episode << '\n';
  out << "hyperparameters " << ckpt.hyperparameters.size() << '\n';
  for (auto const &[k, v] : ckpt.hyperparameters) { out << k << ' ' << v << '\n'; }
  if (ckpt.commander) { write_learner(out, "commander", *ckpt.commander); }
  if (ckpt.agent) { write_learner(out, "agent", *ckpt.agent); }
  out << "end\n";
  return out.str();
}

Checkpoint parse_checkpoint(std::string const &text)
{
  Reader     r(text);
  Checkpoint ckpt;
  r.expect("roomclear-checkpoint");
  if (r.integer() != Checkpoint::kVersion) { throw CheckpointError("unsupported checkpoint version"); }
  r.expect("scenario_hash");
  auto const hash = r.word();
  ckpt.scenario_hash = std::stoull(hash, nullptr, 16);
  r.expect("algo");
  ckpt.algo = r.word();
  r.expect("episode");
  ckpt.episode = r.integer();
  r.expect("hyperparameters");
  auto const hp = r.integer();
  for (std::int64_t i = 0; i < hp; ++i) {
    auto key = r.word();
    auto value = r.line();
    ckpt.hyperparameters.emplace_back(std::move(key), std::move(value));
  }
  for (;;) {
    auto const tag = r.word();
    if (tag == "end") { break; }
    if (tag == "[commander") {
      ckpt.commander = read_learner(r, r.word());
    } else if (tag == "[agent") {
      ckpt.agent = read_learner(r, r.word());
    } else {
      throw CheckpointError("unexpected section '" + tag + "'");
    }
  }
  return ckpt;
}

void write_checkpoint(std::filesystem::path const &path, Checkpoint const &ckpt)
{
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw CheckpointError("cannot write " + path.string()); }
  out << serialize_checkpoint(ckpt);
  if (!out) { throw CheckpointError("write failed for " + path.string()); }
}

Checkpoint read_checkpoint(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw CheckpointError("cannot read " + path.string()); }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

} // namespace roomclear
