#pragma once

#include <cstdint>

#include "promoboard/association_graph.hpp"
#include "promoboard/corpus.hpp"
#include "promoboard/providers.hpp"

namespace promoboard {

/// The shared collaborators every pipeline runs against.
struct Services {
  const graph::AssociationGraph& graph;
  corpus::Corpus& corpus;
  providers::ProviderSuite& providers;
  graph::Thresholds thresholds{};
  corpus::AnnotationOptions annotation{};
};

}  // namespace promoboard
