#pragma once

#include <string>

#include "diffcap/model/ar.hpp"
#include "diffcap/model/nar.hpp"
#include "diffcap/train/checkpoint.hpp"

namespace diffcap {

// A checkpoint turned back into a ready-to-run inference model.
template <class Model, class T>
struct Restored {
  Config cfg;
  Vocabulary vocab;
  int epoch = 0;
  Model model;
};

template <class T>
Restored<NarModel<T>, T> restore_nar(const LoadedCheckpoint<T>& ck) {
  check(ck.cfg.model == "nar", ErrorKind::config,
        "checkpoint holds a '" + ck.cfg.model + "' model, expected 'nar'");
  Rng scratch(0);  // every value is overwritten by the stored tensors
  Restored<NarModel<T>, T> r{ck.cfg, ck.vocab, ck.epoch,
                             NarModel<T>::init(ck.cfg, ck.vocab.size(), scratch)};
  NamedParams<T> p;
  r.model.collect(p);
  assign_params(ck, p);
  return r;
}

template <class T>
Restored<ArModel<T>, T> restore_ar(const LoadedCheckpoint<T>& ck) {
  check(ck.cfg.model == "ar", ErrorKind::config,
        "checkpoint holds a '" + ck.cfg.model + "' model, expected 'ar'");
  Rng scratch(0);
  Restored<ArModel<T>, T> r{ck.cfg, ck.vocab, ck.epoch,
                            ArModel<T>::init(ck.cfg, ck.vocab.size(), scratch)};
  NamedParams<T> p;
  r.model.collect(p);
  assign_params(ck, p);
  return r;
}

}  // namespace diffcap
