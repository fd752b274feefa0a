#include "dynaweight/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dynaweight/parallel.hpp"
#include "dynaweight/rng.hpp"

namespace dynaweight {

Scheme scheme_from_string(const std::string& name) {
  if (name == "simple") return Scheme::Simple;
  if (name == "metropolis") return Scheme::Metropolis;
  if (name == "dynaweight") return Scheme::Dynaweight;
  if (name == "fedavg") return Scheme::FedAvg;
  if (name == "centralized") return Scheme::Centralized;
  throw std::invalid_argument("unknown scheme \"" + name +
                              "\" (valid: simple, metropolis, dynaweight, fedavg, centralized)");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Simple: return "simple";
    case Scheme::Metropolis: return "metropolis";
    case Scheme::Dynaweight: return "dynaweight";
    case Scheme::FedAvg: return "fedavg";
    case Scheme::Centralized: return "centralized";
  }
  return "?";
}

Mailbox::Mailbox(const Graph& g)
    : graph_(&g),
      params_in_(g.n),
      losses_in_(g.n),
      centralities_in_(g.n),
      params_edge_used_(static_cast<std::size_t>(g.n) * g.n, false),
      losses_edge_used_(static_cast<std::size_t>(g.n) * g.n, false),
      centralities_edge_used_(static_cast<std::size_t>(g.n) * g.n, false) {}

void Mailbox::check_edge(int from, int to, const char* kind) const {
  if (!graph_->has_edge(from, to)) {
    throw std::logic_error(std::string("mailbox: ") + kind + " message " +
                           std::to_string(from) + "->" + std::to_string(to) +
                           " is not along a graph edge");
  }
}

void Mailbox::check_duplicate(std::vector<bool>& sent, int from, int to, const char* kind) {
  auto slot = static_cast<std::size_t>(from) * graph_->n + to;
  if (sent[slot]) {
    throw std::logic_error(std::string("mailbox: duplicate ") + kind + " message " +
                           std::to_string(from) + "->" + std::to_string(to) +
                           " within one phase");
  }
  sent[slot] = true;
}

namespace {

// Inboxes stay ordered by sender id no matter the send order, so consumers
// iterate deterministically.
template <typename Msg>
void insert_sorted(std::vector<Msg>& inbox, Msg msg) {
  auto pos = std::find_if(inbox.begin(), inbox.end(),
                          [&](const Msg& m) { return m.from > msg.from; });
  inbox.insert(pos, std::move(msg));
}

}  // namespace

void Mailbox::send_params(int from, int to, const ParamVector& values) {
  check_edge(from, to, "params");
  check_duplicate(params_edge_used_, from, to, "params");
  insert_sorted(params_in_[to], ParamsMsg{from, values});
  ++params_sent_;
}

void Mailbox::send_loss(int from, int to, double value) {
  check_edge(from, to, "loss");
  check_duplicate(losses_edge_used_, from, to, "loss");
  insert_sorted(losses_in_[to], ScalarMsg{from, value});
  ++losses_sent_;
}

void Mailbox::send_centrality(int from, int to, double value) {
  check_edge(from, to, "centrality");
  check_duplicate(centralities_edge_used_, from, to, "centrality");
  insert_sorted(centralities_in_[to], ScalarMsg{from, value});
  ++centralities_sent_;
}

void Mailbox::clear() {
  for (auto& q : params_in_) q.clear();
  for (auto& q : losses_in_) q.clear();
  for (auto& q : centralities_in_) q.clear();
  std::fill(params_edge_used_.begin(), params_edge_used_.end(), false);
  std::fill(losses_edge_used_.begin(), losses_edge_used_.end(), false);
  std::fill(centralities_edge_used_.begin(), centralities_edge_used_.end(), false);
}

void Mailbox::reset_counters() {
  params_sent_ = losses_sent_ = centralities_sent_ = 0;
}

void local_epoch(ServerState& server, const ModelSpec& spec, int epoch, int batch_size,
                 std::uint64_t run_seed) {
  const Dataset& shard = *server.shard;
  if (shard.size() == 0) throw std::invalid_argument("local_epoch: empty shard");

  std::vector<int> order(shard.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(derive_seed(run_seed, seed_stream::kBatch,
                                  (static_cast<std::uint64_t>(server.id) << 32) |
                                      static_cast<std::uint32_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);

  for (int start = 0; start < shard.size(); start += batch_size) {
    int end = std::min(start + batch_size, shard.size());
    std::span<const int> batch(order.data() + start, static_cast<std::size_t>(end - start));
    ParamVector grad = gradient(server.params, spec, shard, batch);
    optimizer_step(server.params, grad, server.opt, epoch);
  }
}

void readout_phase(const std::vector<ServerState>& servers, const Graph& g, Mailbox& mailbox) {
  for (int i = 0; i < g.n; ++i) {
    for (int j : g.adjacency[i]) mailbox.send_params(i, j, servers[i].params);
  }
}

LossTable evaluation_phase(std::vector<ServerState>& servers, const Graph& g,
                           const ModelSpec& spec, Mailbox& mailbox) {
  const int n = g.n;
  LossTable table;
  table.n = n;
  table.losses.resize(n);
  table.centralities.assign(n, 0.0);

  // Each server evaluates the received models on its shard. losses_by_rater
  // [i] holds L_ji for each neighbor j of i, plus L_ii, keyed by j.
  std::vector<std::map<int, double>> losses_by_rater(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t idx) {
    int i = static_cast<int>(idx);
    const auto& inbox = mailbox.params_inbox(i);
    if (static_cast<int>(inbox.size()) != g.degree(i)) {
      throw std::logic_error("evaluation_phase: server " + std::to_string(i) + " expected " +
                             std::to_string(g.degree(i)) + " parameter messages, got " +
                             std::to_string(inbox.size()));
    }
    for (const auto& msg : inbox) {
      if (!g.has_edge(msg.from, i)) {
        throw std::logic_error("evaluation_phase: stray parameter message from " +
                               std::to_string(msg.from));
      }
      servers[i].ghost = msg.values;  // evaluate without keeping the neighbor model
      losses_by_rater[i][msg.from] = loss(servers[i].ghost, spec, *servers[i].shard);
    }
    losses_by_rater[i][i] = loss(servers[i].params, spec, *servers[i].shard);
  });

  // Return each L_ji to its owner j; the self loss stays local.
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, value] : losses_by_rater[i]) {
      if (j == i) continue;
      mailbox.send_loss(i, j, value);
    }
  }
  for (int j = 0; j < n; ++j) {
    table.losses[j][j] = losses_by_rater[j][j];
    for (const auto& msg : mailbox.loss_inbox(j)) table.losses[j][msg.from] = msg.value;
  }

  for (int j = 0; j < n; ++j) table.centralities[j] = centrality(g, table, j);

  // Centralities travel once per directed edge as well.
  for (int j = 0; j < n; ++j) {
    for (int k : g.adjacency[j]) mailbox.send_centrality(j, k, table.centralities[j]);
  }
  return table;
}

void gossip_phase(std::vector<ServerState>& servers, const Graph& g, const WeightMatrix& w,
                  int consensus_steps) {
  if (consensus_steps < 1) throw std::invalid_argument("gossip_phase: need C >= 1");
  if (!w.matches_sparsity(g)) {
    throw std::invalid_argument("gossip_phase: weight matrix violates graph sparsity");
  }
  if (!w.is_row_stochastic(1e-9)) {
    throw std::invalid_argument("gossip_phase: weight matrix is not row-stochastic");
  }

  const int n = g.n;
  std::vector<ParamVector> current(n), next(n);
  for (int i = 0; i < n; ++i) current[i] = servers[i].params;

  for (int step = 0; step < consensus_steps; ++step) {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t idx) {
      int i = static_cast<int>(idx);
      ParamVector& out = next[i];
      out.assign(current[i].size(), 0.0);
      auto accumulate = [&](int j) {
        const double wij = w.at(i, j);
        const ParamVector& src = current[j];
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += wij * src[k];
      };
      // Closed neighborhood in ascending id order for deterministic sums.
      std::size_t pos = 0;
      const auto& nbrs = g.adjacency[i];
      while (pos < nbrs.size() && nbrs[pos] < i) accumulate(nbrs[pos++]);
      accumulate(i);
      while (pos < nbrs.size()) accumulate(nbrs[pos++]);
    });
    std::swap(current, next);
  }
  for (int i = 0; i < n; ++i) servers[i].params = std::move(current[i]);
}

namespace {

std::vector<ServerState> make_servers(const Partition& partition, const ModelSpec& spec,
                                      const RoundConfig& cfg) {
  const int n = static_cast<int>(partition.shards.size());
  ParamVector init = init_params(spec, derive_seed(cfg.seed, seed_stream::kInit));
  std::vector<ServerState> servers;
  servers.reserve(n);
  for (int i = 0; i < n; ++i) {
    ServerState s;
    s.id = i;
    s.params = init;  // every server starts from the same model
    s.shard = &partition.shards[i];
    s.opt = cfg.optimizer;
    servers.push_back(std::move(s));
  }
  return servers;
}

RoundLog measure_round(const std::vector<ServerState>& servers, const ModelSpec& spec,
                       const Dataset& test_set, int epoch_1based, double lr) {
  RoundLog log;
  log.epoch = epoch_1based;
  log.lr = lr;
  log.per_server_test_accuracy.resize(servers.size());
  parallel_for(servers.size(), [&](std::size_t i) {
    log.per_server_test_accuracy[i] = accuracy(servers[i].params, spec, test_set);
  });
  double acc_sum = 0.0;
  for (double a : log.per_server_test_accuracy) acc_sum += a;
  log.avg_test_accuracy = acc_sum / static_cast<double>(servers.size());

  std::vector<ParamVector> params;
  params.reserve(servers.size());
  for (const auto& s : servers) params.push_back(s.params);
  log.consensus_error = consensus_error(params);
  return log;
}

std::vector<WeightEntry> sparse_entries(const WeightMatrix& w, const Graph& g) {
  std::vector<WeightEntry> entries;
  for (int i = 0; i < g.n; ++i) {
    entries.push_back({i, i, w.at(i, i)});
    for (int j : g.adjacency[i]) entries.push_back({i, j, w.at(i, j)});
  }
  return entries;
}

}  // namespace

std::vector<RoundLog> run_decentralized(const RoundConfig& cfg, const Graph& g,
                                        const Partition& partition, const Dataset& test_set,
                                        const ModelSpec& spec) {
  if (cfg.epochs < 1) throw std::invalid_argument("run_decentralized: need epochs >= 1");
  if (static_cast<int>(partition.shards.size()) != g.n) {
    throw std::invalid_argument("run_decentralized: partition size " +
                                std::to_string(partition.shards.size()) +
                                " does not match graph order " + std::to_string(g.n));
  }
  if (cfg.scheme == Scheme::FedAvg || cfg.scheme == Scheme::Centralized) {
    throw std::invalid_argument("run_decentralized: scheme " + to_string(cfg.scheme) +
                                " is not gossip-based");
  }

  auto servers = make_servers(partition, spec, cfg);
  Mailbox mailbox(g);
  const bool adaptive = cfg.scheme == Scheme::Dynaweight;

  WeightMatrix weights;
  if (cfg.scheme == Scheme::Simple) weights = simple_weights(g);
  if (cfg.scheme == Scheme::Metropolis) weights = metropolis_weights(g);

  std::vector<RoundLog> logs;
  logs.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();

    parallel_for(servers.size(), [&](std::size_t i) {
      local_epoch(servers[i], spec, epoch, cfg.batch_size, cfg.seed);
    });

    if (adaptive) {
      if (cfg.frozen_centralities) {
        weights = dynaweight_weights(g, *cfg.frozen_centralities);
      } else {
        mailbox.clear();
        mailbox.reset_counters();
        readout_phase(servers, g, mailbox);
        LossTable table = evaluation_phase(servers, g, spec, mailbox);
        weights = dynaweight_weights(g, table.centralities);
      }
    }

    gossip_phase(servers, g, weights, cfg.consensus_steps);

    RoundLog log = measure_round(servers, spec, test_set, epoch + 1,
                                 cfg.optimizer.learning_rate(epoch));
    if (adaptive && cfg.track_weights) log.weight_rows = sparse_entries(weights, g);
    log.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    logs.push_back(std::move(log));
    if (cfg.on_epoch) cfg.on_epoch(epoch + 1, servers);
  }
  return logs;
}

std::vector<RoundLog> run_fedavg(const RoundConfig& cfg, const Partition& partition,
                                 const Dataset& test_set, const ModelSpec& spec) {
  if (cfg.epochs < 1) throw std::invalid_argument("run_fedavg: need epochs >= 1");
  if (partition.shards.empty()) throw std::invalid_argument("run_fedavg: empty partition");

  auto servers = make_servers(partition, spec, cfg);
  const int n = static_cast<int>(servers.size());

  std::vector<RoundLog> logs;
  logs.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();

    parallel_for(servers.size(), [&](std::size_t i) {
      local_epoch(servers[i], spec, epoch, cfg.batch_size, cfg.seed);
    });

    ParamVector mean(servers[0].params.size(), 0.0);
    for (const auto& s : servers) {
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += s.params[k];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    for (auto& s : servers) s.params = mean;

    RoundLog log = measure_round(servers, spec, test_set, epoch + 1,
                                 cfg.optimizer.learning_rate(epoch));
    log.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    logs.push_back(std::move(log));
    if (cfg.on_epoch) cfg.on_epoch(epoch + 1, servers);
  }
  return logs;
}

std::vector<RoundLog> run_centralized(const RoundConfig& cfg, const Dataset& train,
                                      const Dataset& test_set, const ModelSpec& spec) {
  if (cfg.epochs < 1) throw std::invalid_argument("run_centralized: need epochs >= 1");
  if (train.size() == 0) throw std::invalid_argument("run_centralized: empty dataset");

  Partition single;
  single.seed = cfg.seed;
  single.shards.push_back(train);
  auto servers = make_servers(single, spec, cfg);

  std::vector<RoundLog> logs;
  logs.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    local_epoch(servers[0], spec, epoch, cfg.batch_size, cfg.seed);
    RoundLog log = measure_round(servers, spec, test_set, epoch + 1,
                                 cfg.optimizer.learning_rate(epoch));
    log.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    logs.push_back(std::move(log));
    if (cfg.on_epoch) cfg.on_epoch(epoch + 1, servers);
  }
  return logs;
}

}  // namespace dynaweight
