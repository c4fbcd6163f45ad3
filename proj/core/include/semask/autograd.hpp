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

#ifndef SEMASK_AUTOGRAD_HPP_
#define SEMASK_AUTOGRAD_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "semask/tensor.hpp"

namespace semask {

class Tape;

// Trainable tensor with a persistent gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

// Ordered, address-stable collection of named parameters.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t num_scalars() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Dynamic reverse-mode tape. Operations append nodes in execution order, so
// node inputs always precede the node. Single-owner; not thread-safe.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  // With record == false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Value that never receives gradient.
  Var constant(Tensor value);
  // Free leaf that accumulates gradient on the tape.
  Var leaf(Tensor value);
  // Leaf bound to a parameter; repeated calls return the same node. backward()
  // adds the leaf gradient into param.grad.
  Var param(Parameter& param);

  // Value references stay valid for the lifetime of the tape.
  const Tensor& value(const Var& v) const { return nodes_[v.id()].value; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }

  // Gradient of the last backward() w.r.t. v; zeros if v did not influence the loss.
  Tensor grad(const Var& v) const;

  // Runs reverse accumulation from a scalar loss. Throws ContractError for a
  // non-scalar loss or on a second call.
  void backward(const Var& loss);

  bool recording() const { return record_; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Appends an operation result. fn is dropped when no input requires grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  // Gradient accumulator of a node, allocated on first use. Valid during backward.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    std::unique_ptr<Tensor> grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  template <typename Range>
  Var record_impl(Tensor value, const Range& inputs, BackwardFn fn);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool record_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace semask

#endif  // SEMASK_AUTOGRAD_HPP_
