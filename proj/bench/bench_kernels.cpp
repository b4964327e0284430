// Serial reference vs OpenMP kernels on a synthetic corpus. Set
// OMP_NUM_THREADS to control the parallel side.

#include <map>

#include <benchmark/benchmark.h>

#include "sgusm/encoder.hpp"
#include "sgusm/kernels.hpp"
#include "sgusm/synthetic.hpp"

using namespace sgusm;

namespace {

struct Data {
  Corpus corpus;
  std::vector<const Dialogue*> dialogues;
  std::vector<Eigen::MatrixXd> features;
  Eigen::MatrixXd attribute_features;
  Eigen::VectorXd importance;
  ModelParams params;
  ModelSettings settings;
  std::vector<kernels::Example> batch;

  explicit Data(int hidden) {
    corpus = synthetic::semi_supervised_corpus(9);
    for (const auto& d : corpus.unlabeled) dialogues.push_back(&d);
    EncoderConfig cfg;
    cfg.hidden_size = hidden;
    const Encoder enc(cfg);
    features = kernels::serial::turn_features(enc, dialogues);
    attribute_features = enc.attribute_features(corpus.schema);
    importance = Eigen::VectorXd::Constant(attribute_features.rows(), 1.0 / static_cast<double>(attribute_features.rows()));
    params = ModelParams::init(hidden, 1);
    for (std::size_t k = 0; k < 64; ++k) batch.push_back({&features[k], static_cast<int>(k % 3)});
  }
};

const Data& data(int hidden) {
  static std::map<int, Data> cache;
  auto it = cache.find(hidden);
  if (it == cache.end()) it = cache.emplace(hidden, Data(hidden)).first;
  return it->second;
}

template <bool Parallel>
void BM_SelectionCounts(benchmark::State& state) {
  const Data& d = data(static_cast<int>(state.range(0)));
  const MmrConfig mmr{2, 0.5};
  for (auto _ : state) {
    auto c = Parallel ? kernels::parallel::selection_counts(d.features, d.attribute_features, mmr)
                      : kernels::serial::selection_counts(d.features, d.attribute_features, mmr);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.features.size()));
}

template <bool Parallel>
void BM_BatchGradients(benchmark::State& state) {
  const Data& d = data(static_cast<int>(state.range(0)));
  kernels::BatchInputs in{&d.params, &d.settings, &d.attribute_features, &d.importance, 7, false};
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::batch_gradients(in, d.batch) : kernels::serial::batch_gradients(in, d.batch);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.batch.size()));
}

template <bool Parallel>
void BM_ForwardAll(benchmark::State& state) {
  const Data& d = data(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::forward_all(d.params, d.settings, d.features, d.attribute_features, d.importance)
                      : kernels::serial::forward_all(d.params, d.settings, d.features, d.attribute_features, d.importance);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.features.size()));
}

}  // namespace

BENCHMARK(BM_SelectionCounts<false>)->Name("selection_counts/serial")->Arg(64)->Arg(256)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SelectionCounts<true>)->Name("selection_counts/parallel")->Arg(64)->Arg(256)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradients<false>)->Name("batch_gradients/serial")->Arg(64)->Arg(256)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradients<true>)->Name("batch_gradients/parallel")->Arg(64)->Arg(256)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardAll<false>)->Name("forward_all/serial")->Arg(64)->Arg(256)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardAll<true>)->Name("forward_all/parallel")->Arg(64)->Arg(256)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
