/* Copyright 2026 The semask Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "semask/autograd.hpp"

#include "semask/errors.hpp"

namespace semask {

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter " + name);
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return *params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return *params_[it->second];
}

std::size_t ParameterSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& param) {
  auto it = param_nodes_.find(&param);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Var v = leaf(param.value);
  nodes_[v.id()].param = &param;
  param_nodes_.emplace(&param, v.id());
  return v;
}

Tensor Tape::grad(const Var& v) const {
  const Node& node = nodes_.at(v.id());
  if (node.grad) return *node.grad;
  return Tensor(node.value.shape(), 0.0);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.grad) node.grad = std::make_unique<Tensor>(node.value.shape(), 0.0);
  return *node.grad;
}

template <typename Range>
Var Tape::record_impl(Tensor value, const Range& inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (in.valid() && nodes_[in.id()].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
    if (node.requires_grad) node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record_impl(std::move(value), inputs, std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  return record_impl(std::move(value), inputs, std::move(fn));
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (!record_) throw ContractError("backward: tape was created without recording");
  if (backward_done_) throw ContractError("backward: tape already consumed; re-run forward");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_str(loss.value().shape()));
  }
  backward_done_ = true;
  grad_buffer(loss.id()).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad || !node.backward) continue;
    const Tensor& g = *node.grad;
    node.backward(*this, g);
  }
  for (Node& node : nodes_) {
    if (node.param && node.grad) {
      auto dst = node.param->grad.data();
      auto src = node.grad->data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

}  // namespace semask
