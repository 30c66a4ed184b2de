#include "ai2v/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace ai2v {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw UsageError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::string one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (value == a) return value;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  throw UsageError("config key '" + key + "': expected " + list + ", got '" + value + "'");
}

std::string unescape_delimiter(const std::string& v) {
  if (v == "\\t" || v == "tab") return "\t";
  if (v == "space") return " ";
  return v;
}

std::string escape_delimiter(const std::string& v) { return v == "\t" ? "\\t" : v; }

template <typename T>
std::string show(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  const char* name;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Field> fields(RunConfig& c) {
  auto str = [](const char* name, std::string& ref) {
    return Field{name, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }};
  };
  auto size = [](const char* name, std::size_t& ref) {
    return Field{name, [&ref, name](const std::string& v) { ref = parse_value<std::size_t>(name, v); },
                 [&ref] { return show(ref); }};
  };
  auto real = [](const char* name, double& ref) {
    return Field{name, [&ref, name](const std::string& v) { ref = parse_value<double>(name, v); },
                 [&ref] { return show(ref); }};
  };
  auto flag = [](const char* name, bool& ref) {
    return Field{name, [&ref, name](const std::string& v) { ref = parse_bool(name, v); },
                 [&ref] { return std::string(ref ? "true" : "false"); }};
  };
  auto& t = c.train;
  return {
      str("ratings", c.ratings),
      {"format", [&c](const std::string& v) { c.format = one_of("format", v, {"movielens", "yahoo", "generic"}); },
       [&c] { return c.format; }},
      {"delimiter", [&c](const std::string& v) { c.delimiter = unescape_delimiter(v); },
       [&c] { return escape_delimiter(c.delimiter); }},
      flag("has_timestamp", c.has_timestamp),
      real("rating_threshold", c.rating_threshold),
      {"split", [&c](const std::string& v) { c.split = one_of("split", v, {"leave-last", "temporal"}); },
       [&c] { return c.split; }},
      {"cutoff", [&c](const std::string& v) { c.cutoff = parse_value<std::int64_t>("cutoff", v); },
       [&c] { return show(c.cutoff); }},
      size("min_len", c.min_len),
      size("n_top_popular", c.n_top_popular),
      size("sample_users", c.sample_users),
      size("sample_items", c.sample_items),
      {"model", [&c](const std::string& v) { c.model = one_of("model", v, {"ai2v", "i2v"}); },
       [&c] { return c.model; }},
      str("corpus", c.corpus),
      str("checkpoint", c.checkpoint),
      str("report", c.report),
      str("ranks", c.ranks),
      flag("exclude_seen", c.exclude_seen),
      flag("save_optimizer_state", c.save_optimizer_state),
      size("dim", t.dim),
      size("attn_dim", t.attn_dim),
      size("heads", t.heads),
      size("negatives", t.negatives),
      real("lr", t.lr),
      real("adagrad_eps", t.adagrad_eps),
      size("minibatch", t.minibatch),
      size("epochs", t.epochs),
      {"seed", [&t](const std::string& v) { t.seed = parse_value<std::uint64_t>("seed", v); },
       [&t] { return show(t.seed); }},
      real("subsample", t.subsample),
      real("unigram_power", t.unigram_power),
      size("context_cap", t.context_cap),
      {"threads", [&t](const std::string& v) { t.threads = parse_value<unsigned>("threads", v); },
       [&t] { return show(t.threads); }},
  };
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& f : fields(*this)) {
    if (key == f.name) {
      f.set(value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::merge_stream(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path);
  merge_stream(in, path);
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::pair<std::string, std::string>> RunConfig::effective() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& f : fields(const_cast<RunConfig&>(*this))) out.emplace_back(f.name, f.get());
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : effective()) os << k << " = " << v << '\n';
  return os.str();
}

RatingFormat RunConfig::rating_format() const {
  RatingFormat f = format == "movielens" ? RatingFormat::movielens()
                   : format == "yahoo"   ? RatingFormat::yahoo()
                                         : RatingFormat::generic();
  if (!delimiter.empty()) f.delimiter = delimiter;
  f.has_timestamp = has_timestamp;
  return f;
}

PositivityRule RunConfig::positivity_rule() const {
  if (format == "movielens") return PositivityRule::movielens(rating_threshold >= 0.0 ? rating_threshold : 3.5);
  if (format == "yahoo") return PositivityRule::yahoo(rating_threshold >= 0.0 ? rating_threshold : 80.0);
  if (rating_threshold >= 0.0) return PositivityRule::movielens(rating_threshold);
  return PositivityRule::none();
}

std::size_t RunConfig::effective_min_len() const {
  if (min_len > 0) return min_len;
  return split == "temporal" ? 4 : 2;
}

void RunConfig::validate() const {
  train.validate();
  if (split == "temporal" && !has_timestamp) throw UsageError("temporal split needs has_timestamp = true");
}

}  // namespace ai2v
