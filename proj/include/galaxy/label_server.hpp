#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "galaxy/engine.hpp"
#include "galaxy/io.hpp"
#include "galaxy/metrics.hpp"
#include "galaxy/strategies.hpp"

namespace galaxy::server {

using nlohmann::json;

// HTTP-facing failure: status code plus a diagnostic for the body.
struct http_error : std::runtime_error {
  int status;
  http_error(int s, const std::string& what) : std::runtime_error(what), status(s) {}
};

enum class SessionState { awaiting_label, batch_complete, exhausted };

constexpr std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::awaiting_label: return "awaiting-label";
    case SessionState::batch_complete: return "batch-complete";
    case SessionState::exhausted: return "exhausted";
  }
  return "unknown";
}

struct SessionConfig {
  std::size_t batch_size = 0;
  Strategy strategy = Strategy::galaxy;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;
  std::vector<ClassId> id_classes;
};

struct HistoryEntry {
  ExampleId id;
  ClassId label;
  Provenance provenance;
  std::size_t batch;  // 0 for seed labels, then 1, 2, ...
};

// One labeling session. Every mutation goes through apply(), which is fed
// either by a live request or by replaying the event log, so the two paths
// cannot drift apart.
class Session {
 public:
  Session(std::string id, std::filesystem::path dir) : id_(std::move(id)), dir_(std::move(dir)) {}

  const std::string& id() const { return id_; }
  std::mutex& mutex() { return mu_; }

  // Applies an event. Validation failures throw http_error before any state
  // changes.
  void apply(const json& ev) {
    const auto type = ev.at("type").get<std::string>();
    if (type == "create") return apply_create(ev);
    if (type == "label") return apply_label(ev.at("example_id").get<std::uint32_t>(), ev.at("class").get<std::uint32_t>());
    if (type == "scores") return apply_scores(read_gxsm(dir_ / ev.at("file").get<std::string>()));
    throw format_error("unknown event type '" + type + "'");
  }

  // Live mutation: validate and apply, then append to the log.
  void record(const json& ev) {
    apply(ev);
    std::ofstream f(dir_ / "events.jsonl", std::ios::app | std::ios::binary);
    f << ev.dump() << '\n';
    f.flush();
    if (!f) throw std::runtime_error("cannot append to event log of session " + id_);
  }

  void check_label(std::uint32_t x, std::uint32_t c) const {
    if (state_ != SessionState::awaiting_label || !next_)
      throw http_error(409, "no query is outstanding (state " + std::string(to_string(state_)) + ")");
    if (x != next_->id.value)
      throw http_error(409, "example " + std::to_string(x) + " is not the outstanding query " +
                                std::to_string(next_->id.value));
    if (c >= scores_.classes()) throw http_error(400, "class " + std::to_string(c) + " outside [0, K)");
  }

  void check_scores(const ScoreMatrix& s) const {
    if (state_ == SessionState::awaiting_label)
      throw http_error(409, "new scores are accepted only between batches");
    if (s.rows() != scores_.rows() || s.classes() != scores_.classes())
      throw http_error(400, "scores are " + std::to_string(s.rows()) + "x" + std::to_string(s.classes()) +
                                ", session pool is " + std::to_string(scores_.rows()) + "x" +
                                std::to_string(scores_.classes()));
  }

  std::size_t next_scores_index() const { return scores_version_ + 1; }
  const std::filesystem::path& dir() const { return dir_; }

  json next_json() const {
    if (!next_) return nullptr;
    json j{{"example_id", next_->id.value}, {"provenance", to_string(next_->provenance)}};
    const auto it = meta_.find(next_->id.value);
    j["meta"] = it == meta_.end() ? json(nullptr) : json(it->second);
    return j;
  }

  json metrics_json() const {
    const auto& l = labeled();
    json j{{"labels_used", l.size()}, {"id_labels", id_label_count(l, config_.id_classes)}};
    j["id_label_fraction"] = l.empty() ? json(nullptr) : json(id_label_fraction(l, config_.id_classes));
    return j;
  }

  // Response to a create or label request.
  json step_json() const {
    json j{{"session_id", id_}, {"state", to_string(state_)}, {"next", next_json()}};
    if (state_ != SessionState::awaiting_label) {
      json summary = metrics_json();
      summary["batch"] = batch_index_;
      summary["batch_labels"] = batch_progress_;
      j["summary"] = summary;
    }
    return j;
  }

  json snapshot() const {
    json history = json::array();
    for (const auto& h : history_)
      history.push_back({{"example_id", h.id.value},
                         {"class", h.label.value},
                         {"provenance", to_string(h.provenance)},
                         {"batch", h.batch}});
    json ids = json::array();
    for (auto c : config_.id_classes) ids.push_back(c.value);
    return json{{"session_id", id_},
                {"state", to_string(state_)},
                {"config",
                 {{"batch_size", config_.batch_size},
                  {"strategy", to_string(config_.strategy)},
                  {"seed", config_.seed},
                  {"class_names", config_.class_names},
                  {"id_classes", ids}}},
                {"pool", {{"n", scores_.rows()}, {"k", scores_.classes()}}},
                {"batch", {{"index", batch_index_}, {"issued", batch_progress_}, {"size", config_.batch_size}}},
                {"ord", order()},
                {"history", history},
                {"next", next_json()},
                {"metrics", metrics_json()}};
  }

  SessionState state() const { return state_; }

 private:
  const LabeledSet& labeled() const { return galaxy_ ? galaxy_->labeled() : labeled_; }

  std::uint32_t order() const { return galaxy_ ? galaxy_->order() : 1; }

  void apply_create(const json& ev) {
    const auto& cfg = ev.at("config");
    SessionConfig c;
    c.batch_size = cfg.at("batch_size").get<std::size_t>();
    if (c.batch_size < 1) throw http_error(400, "batch_size must be at least 1");
    c.strategy = strategy_from_string(cfg.value("strategy", std::string("galaxy")));
    c.seed = cfg.value("seed", std::uint64_t{0});
    scores_ = read_gxsm(dir_ / ev.at("file").get<std::string>());
    c.class_names = cfg.value("class_names", std::vector<std::string>{});
    if (!c.class_names.empty() && c.class_names.size() != scores_.classes())
      throw http_error(400, "class_names has " + std::to_string(c.class_names.size()) + " entries, pool has " +
                                std::to_string(scores_.classes()) + " classes");
    if (cfg.contains("id_classes")) {
      for (auto v : cfg["id_classes"]) {
        const auto k = v.get<std::uint32_t>();
        if (k >= scores_.classes()) throw http_error(400, "id class outside [0, K)");
        c.id_classes.push_back(ClassId{k});
      }
    } else {
      c.id_classes = default_id_classes(scores_.classes());
    }
    labeled_ = LabeledSet(scores_.rows());
    for (const auto& e : cfg.value("seed_labels", json::array())) {
      const auto x = e.at("example_id").get<std::uint32_t>();
      const auto k = e.at("class").get<std::uint32_t>();
      if (x >= scores_.rows()) throw http_error(400, "seed label for example outside the pool");
      if (k >= scores_.classes()) throw http_error(400, "seed label class outside [0, K)");
      if (labeled_.contains(ExampleId{x})) throw http_error(400, "duplicate seed label for example " + std::to_string(x));
      labeled_.add(ExampleId{x}, ClassId{k});
      history_.push_back({ExampleId{x}, ClassId{k}, Provenance::seed_round, 0});
    }
    const json meta = ev.value("meta", json::object());
    if (!meta.is_object()) throw http_error(400, "meta must be an object keyed by example id");
    for (const auto& [k, v] : meta.items()) {
      const auto idx = detail::parse_number<std::uint32_t>(k);
      if (!idx || *idx >= scores_.rows()) throw http_error(400, "meta key '" + k + "' is not an example id");
      meta_[*idx] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    config_ = std::move(c);
    start_batch();
  }

  void start_batch() {
    ++batch_index_;
    batch_progress_ = 0;
    plan_.clear();
    galaxy_.reset();
    if (labeled_.unlabeled_count() == 0) {
      state_ = SessionState::exhausted;
      next_.reset();
      return;
    }
    Rng rng = substream(config_.seed, batch_index_);
    switch (config_.strategy) {
      case Strategy::galaxy:
        galaxy_.emplace(scores_, labeled_, config_.batch_size, std::move(rng));
        break;
      case Strategy::confidence: plan_ = confidence_sampling_batch(scores_, labeled_, config_.batch_size).ids; break;
      case Strategy::most_likely_positive:
        plan_ = most_likely_positive_batch(scores_, labeled_, config_.batch_size, config_.id_classes).ids;
        break;
      case Strategy::random: plan_ = random_batch(labeled_, scores_.rows(), config_.batch_size, rng).ids; break;
    }
    state_ = SessionState::awaiting_label;
    advance();
  }

  void advance() {
    if (galaxy_) {
      const auto& q = galaxy_->pending();
      next_ = q;
    } else if (batch_progress_ < plan_.size()) {
      next_ = Query{plan_[batch_progress_], Provenance::one_shot, ClassId{}, 0, 1};
    } else {
      next_.reset();
    }
    if (!next_) state_ = labeled().unlabeled_count() == 0 ? SessionState::exhausted : SessionState::batch_complete;
  }

  void apply_label(std::uint32_t x, std::uint32_t c) {
    check_label(x, c);
    const Provenance p = next_->provenance;
    if (galaxy_) {
      galaxy_->submit(ExampleId{x}, ClassId{c});
      labeled_ = galaxy_->labeled();
    } else {
      labeled_.add(ExampleId{x}, ClassId{c});
    }
    history_.push_back({ExampleId{x}, ClassId{c}, p, batch_index_});
    ++batch_progress_;
    advance();
  }

  void apply_scores(ScoreMatrix s) {
    check_scores(s);
    scores_ = std::move(s);
    ++scores_version_;
    start_batch();
  }

  std::string id_;
  std::filesystem::path dir_;
  std::mutex mu_;
  SessionConfig config_;
  ScoreMatrix scores_;
  std::size_t scores_version_ = 0;
  LabeledSet labeled_;
  std::map<std::uint32_t, std::string> meta_;
  std::vector<HistoryEntry> history_;
  std::size_t batch_index_ = 0;
  std::size_t batch_progress_ = 0;
  std::optional<GalaxySession> galaxy_;
  std::vector<ExampleId> plan_;
  std::optional<Query> next_;
  SessionState state_ = SessionState::exhausted;
};

struct ServerOptions {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> static_dir;
  std::size_t max_body_bytes = std::size_t{256} << 20;
};

// Session registry plus HTTP routes. Sessions found under data_dir are
// rebuilt from their event logs on construction.
class LabelServer {
 public:
  explicit LabelServer(ServerOptions opt) : opt_(std::move(opt)) {
    std::filesystem::create_directories(opt_.data_dir);
    for (const auto& entry : std::filesystem::directory_iterator(opt_.data_dir)) {
      if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "events.jsonl")) continue;
      auto s = std::make_shared<Session>(entry.path().filename().string(), entry.path());
      std::ifstream f(entry.path() / "events.jsonl");
      std::string line;
      while (std::getline(f, line))
        if (!line.empty()) s->apply(json::parse(line));
      sessions_[s->id()] = std::move(s);
    }
    if (!sessions_.empty()) spdlog::info("replayed {} session(s) from {}", sessions_.size(), opt_.data_dir.string());
  }

  std::size_t session_count() const {
    std::shared_lock lk(registry_mu_);
    return sessions_.size();
  }

  void bind(httplib::Server& svr) {
    svr.set_payload_max_length(opt_.max_body_bytes);
    if (opt_.static_dir) svr.set_mount_point("/", opt_.static_dir->string());

    svr.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return std::pair{201, create(req)}; });
    });
    svr.Post(R"(/sessions/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return std::pair{200, label(req.matches[1], req)}; });
    });
    svr.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto s = find(req.matches[1]);
        std::lock_guard lk(s->mutex());
        return std::pair{200, s->snapshot()};
      });
    });
    svr.Put(R"(/sessions/([^/]+)/scores)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return std::pair{200, update_scores(req.matches[1], req)}; });
    });
  }

 private:
  template <class Fn>
  static void handle(httplib::Response& res, Fn&& fn) {
    try {
      auto [status, body] = fn();
      res.status = status;
      res.set_content(body.dump(), "application/json");
    } catch (const http_error& e) {
      fail(res, e.status, e.what());
    } catch (const json::exception& e) {
      fail(res, 400, std::string("malformed request: ") + e.what());
    } catch (const input_error& e) {
      fail(res, 400, e.what());
    } catch (const format_error& e) {
      fail(res, 400, e.what());
    } catch (const std::exception& e) {
      spdlog::error("internal error: {}", e.what());
      fail(res, 500, e.what());
    }
  }

  static void fail(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(json{{"error", msg}}.dump(), "application/json");
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::shared_lock lk(registry_mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw http_error(404, "unknown session '" + id + "'");
    return it->second;
  }

  std::string fresh_id() {
    std::random_device rd;
    for (;;) {
      const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
      std::shared_lock lk(registry_mu_);
      if (!sessions_.contains(buf) && !std::filesystem::exists(opt_.data_dir / buf)) return buf;
    }
  }

  // Scores come as {"scores_csv": "..."} or {"scores_path": "file.gxsm"}.
  static ScoreMatrix scores_from_json(const json& body) {
    if (body.contains("scores_csv")) return parse_scores_csv(body["scores_csv"].get<std::string>());
    if (body.contains("scores_path")) return read_gxsm(body["scores_path"].get<std::string>());
    throw http_error(400, "request needs scores_csv or scores_path");
  }

  json create(const httplib::Request& req) {
    const json body = json::parse(req.body);
    if (!body.is_object() || !body.contains("config")) throw http_error(400, "request needs a config object");
    const ScoreMatrix s = scores_from_json(body);
    const std::string id = fresh_id();
    const auto dir = opt_.data_dir / id;
    auto session = std::make_shared<Session>(id, dir);
    std::filesystem::create_directories(dir);
    try {
      write_gxsm(dir / "scores-0.gxsm", s);
      json ev{{"type", "create"}, {"config", body["config"]}, {"file", "scores-0.gxsm"}};
      if (body.contains("meta")) ev["meta"] = body["meta"];
      session->record(ev);
    } catch (...) {
      std::filesystem::remove_all(dir);
      throw;
    }
    {
      std::unique_lock lk(registry_mu_);
      sessions_[id] = session;
    }
    std::lock_guard lk(session->mutex());
    spdlog::info("session {} created ({} examples)", id, s.rows());
    return session->step_json();
  }

  json label(const std::string& id, const httplib::Request& req) {
    auto s = find(id);
    const json body = json::parse(req.body);
    const json ev{{"type", "label"},
                  {"example_id", body.at("example_id").get<std::uint32_t>()},
                  {"class", body.at("class").get<std::uint32_t>()}};
    std::lock_guard lk(s->mutex());
    s->record(ev);
    return s->step_json();
  }

  json update_scores(const std::string& id, const httplib::Request& req) {
    auto s = find(id);
    const bool binary = req.get_header_value("Content-Type").starts_with("application/octet-stream");
    const ScoreMatrix m = binary ? decode_gxsm(req.body) : scores_from_json(json::parse(req.body));
    std::lock_guard lk(s->mutex());
    s->check_scores(m);
    const std::string file = "scores-" + std::to_string(s->next_scores_index()) + ".gxsm";
    write_gxsm(s->dir() / file, m);
    s->record(json{{"type", "scores"}, {"file", file}});
    return s->step_json();
  }

  ServerOptions opt_;
  mutable std::shared_mutex registry_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace galaxy::server
