"""Static parameter and FLOP accounting for convolutional layer graphs.

Convention (recorded in every report): one multiply-accumulate costs 2 FLOPs,
bias adds and element-wise activations are counted, data movement (concat,
pixel shuffle) is free. All totals are exact integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .space import Configuration, SearchSpace, default_space

FLOP_CONVENTION = "2 flops per MAC; bias and element-wise ops counted; data movement free"

INPUT_ID = "input"

CONV_KINDS = ("conv2d",)
ELEMENTWISE_KINDS = ("relu", "leaky_relu", "add")
FREE_KINDS = ("concat", "pixel_shuffle")
ALL_KINDS = CONV_KINDS + ELEMENTWISE_KINDS + FREE_KINDS


class GraphError(ValueError):
    """Inconsistent layer spec or graph."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel_h: int = 0
    kernel_w: int = 0
    stride: int = 1
    padding_mode: str = "same"
    has_bias: bool = True
    factor: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ALL_KINDS:
            raise GraphError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv2d":
            if min(self.in_channels, self.out_channels, self.kernel_h, self.kernel_w, self.stride) <= 0:
                raise GraphError("conv2d needs positive channel/kernel/stride counts")
            if self.padding_mode not in ("same", "valid"):
                raise GraphError(f"bad padding_mode {self.padding_mode!r}")
        if self.kind == "pixel_shuffle" and self.factor <= 0:
            raise GraphError("pixel_shuffle needs a positive factor")


@dataclass(frozen=True)
class GraphNode:
    layer_id: str
    spec: LayerSpec
    input_ids: tuple[str, ...]


@dataclass(frozen=True)
class ArchitectureGraph:
    """Topologically ordered layer graph with a declared input tensor."""

    nodes: tuple[GraphNode, ...]
    input_height: int
    input_width: int
    input_channels: int
    input_frames: int = 1
    label: str = ""

    def __post_init__(self) -> None:
        if min(self.input_height, self.input_width, self.input_channels, self.input_frames) <= 0:
            raise GraphError("input dimensions must be positive")
        seen = {INPUT_ID}
        for node in self.nodes:
            if node.layer_id in seen:
                raise GraphError(f"duplicate layer id {node.layer_id!r}")
            for ref in node.input_ids:
                if ref not in seen:
                    raise GraphError(
                        f"layer {node.layer_id!r} consumes {ref!r} before it is defined"
                    )
            seen.add(node.layer_id)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "input_shape": {
                "height": self.input_height,
                "width": self.input_width,
                "channels": self.input_channels,
                "frames": self.input_frames,
            },
            "layers": [
                {
                    "id": n.layer_id,
                    "kind": n.spec.kind,
                    "inputs": list(n.input_ids),
                    **_spec_fields(n.spec),
                }
                for n in self.nodes
            ],
        }


def _spec_fields(spec: LayerSpec) -> dict:
    if spec.kind == "conv2d":
        return {
            "in_channels": spec.in_channels,
            "out_channels": spec.out_channels,
            "kernel": [spec.kernel_h, spec.kernel_w],
            "stride": spec.stride,
            "padding": spec.padding_mode,
            "bias": spec.has_bias,
        }
    if spec.kind == "pixel_shuffle":
        return {"factor": spec.factor}
    return {}


@dataclass(frozen=True)
class LayerCost:
    layer_id: str
    params: int
    flops: int
    out_shape: tuple[int, int, int]


@dataclass(frozen=True)
class CostReport:
    label: str
    total_params: int
    total_flops: int
    per_layer: tuple[LayerCost, ...]
    assumptions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "flop_convention": FLOP_CONVENTION,
            "assumptions": dict(self.assumptions),
            "total_params": self.total_params,
            "total_flops": self.total_flops,
            "params_m": self.total_params / 1e6,
            "gflops": self.total_flops / 1e9,
            "per_layer": [
                {
                    "id": c.layer_id,
                    "params": c.params,
                    "flops": c.flops,
                    "out_shape": list(c.out_shape),
                }
                for c in self.per_layer
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def conv2d_cost(
    layer: LayerSpec, in_shape: tuple[int, int, int]
) -> tuple[int, int, tuple[int, int, int]]:
    """Exact (params, flops, out_shape) for one convolution."""
    if layer.kind != "conv2d":
        raise GraphError("conv2d_cost requires a conv2d layer")
    h, w, c = in_shape
    if c != layer.in_channels:
        raise GraphError(
            f"channel mismatch: input has {c}, layer expects {layer.in_channels}"
        )
    if layer.padding_mode == "same":
        out_h = -(-h // layer.stride)
        out_w = -(-w // layer.stride)
    else:
        out_h = (h - layer.kernel_h) // layer.stride + 1
        out_w = (w - layer.kernel_w) // layer.stride + 1
    if out_h <= 0 or out_w <= 0:
        raise GraphError("convolution output has non-positive spatial dims")
    kernel = layer.in_channels * layer.kernel_h * layer.kernel_w
    params = layer.out_channels * kernel + (layer.out_channels if layer.has_bias else 0)
    macs = out_h * out_w * layer.out_channels * kernel
    flops = 2 * macs + (out_h * out_w * layer.out_channels if layer.has_bias else 0)
    return params, flops, (out_h, out_w, layer.out_channels)


def _layer_cost(
    spec: LayerSpec, in_shapes: Sequence[tuple[int, int, int]]
) -> tuple[int, int, tuple[int, int, int]]:
    if spec.kind == "conv2d":
        if len(in_shapes) != 1:
            raise GraphError("conv2d takes exactly one input")
        return conv2d_cost(spec, in_shapes[0])
    if spec.kind in ("relu", "leaky_relu"):
        if len(in_shapes) != 1:
            raise GraphError(f"{spec.kind} takes exactly one input")
        h, w, c = in_shapes[0]
        return 0, h * w * c, in_shapes[0]
    if spec.kind == "add":
        if len(in_shapes) < 2:
            raise GraphError("add needs at least two inputs")
        if len(set(in_shapes)) != 1:
            raise GraphError(f"add inputs disagree on shape: {in_shapes}")
        h, w, c = in_shapes[0]
        return 0, (len(in_shapes) - 1) * h * w * c, in_shapes[0]
    if spec.kind == "concat":
        if len(in_shapes) < 2:
            raise GraphError("concat needs at least two inputs")
        if len({(h, w) for h, w, _ in in_shapes}) != 1:
            raise GraphError(f"concat inputs disagree on spatial dims: {in_shapes}")
        h, w, _ = in_shapes[0]
        return 0, 0, (h, w, sum(c for _, _, c in in_shapes))
    # pixel_shuffle
    if len(in_shapes) != 1:
        raise GraphError("pixel_shuffle takes exactly one input")
    h, w, c = in_shapes[0]
    f2 = spec.factor * spec.factor
    if c % f2 != 0:
        raise GraphError(
            f"pixel_shuffle factor {spec.factor} needs channels divisible by {f2}, got {c}"
        )
    return 0, 0, (h * spec.factor, w * spec.factor, c // f2)


def graph_cost(graph: ArchitectureGraph, assumptions: dict | None = None) -> CostReport:
    """Propagate shapes topologically and sum exact per-layer costs."""
    shapes: dict[str, tuple[int, int, int]] = {
        INPUT_ID: (
            graph.input_height,
            graph.input_width,
            graph.input_channels * graph.input_frames,
        )
    }
    per_layer = []
    total_params = 0
    total_flops = 0
    for node in graph.nodes:
        in_shapes = [shapes[ref] for ref in node.input_ids]
        params, flops, out_shape = _layer_cost(node.spec, in_shapes)
        shapes[node.layer_id] = out_shape
        per_layer.append(LayerCost(node.layer_id, params, flops, out_shape))
        total_params += params
        total_flops += flops
    return CostReport(
        label=graph.label,
        total_params=total_params,
        total_flops=total_flops,
        per_layer=tuple(per_layer),
        assumptions=dict(assumptions or {}),
    )


# Structural assumptions for the generated VSR candidate family. The source
# diagrams omit kernel sizes, the upsample mechanism, and the optical-flow
# net's share, so each choice is named here and echoed in every report.
HOFVSR_ASSUMPTIONS = {
    "kernels": "3x3 throughout",
    "upsampling": "sub-pixel (pixel shuffle), one x2 stage per scale doubling",
    "upsample_channels": (
        "stage 1 conv expands to 4*up_channels (shuffle lands on up_channels); "
        "later stages expand to up_channels, quartering the post-shuffle width"
    ),
    "ofr_net": "excluded: the optical-flow net is fixed across all candidates",
    "frames": "frames axis folded into channels at the entry conv",
}


def _conv3(in_ch: int, out_ch: int) -> LayerSpec:
    return LayerSpec(
        kind="conv2d",
        in_channels=in_ch,
        out_channels=out_ch,
        kernel_h=3,
        kernel_w=3,
        stride=1,
        padding_mode="same",
        has_bias=True,
    )


def hofvsr_graph(
    res_channels: int,
    n_res: int,
    up_channels: int,
    scale: int = 4,
    in_shape: tuple[int, int, int, int] = (36, 36, 1, 3),
    space: SearchSpace | None = None,
) -> ArchitectureGraph:
    """Candidate VSR network: entry conv, residual trunk, sub-pixel upsampling.

    res_channels/n_res/up_channels must be members of the search space domains
    (the shipped 800-point space by default); scale must be a power of two.
    """
    if scale < 2 or scale & (scale - 1) != 0:
        raise GraphError(f"scale must be a power of 2 >= 2, got {scale}")
    if space is None:
        space = default_space()
    config = Configuration.from_mapping(
        {"res_channels": res_channels, "n_res": n_res, "up_channels": up_channels}
    )
    from .space import validate

    validate(space, config)

    height, width, channels, frames = in_shape
    nodes: list[GraphNode] = []

    def emit(layer_id: str, spec: LayerSpec, inputs: Sequence[str]) -> str:
        nodes.append(GraphNode(layer_id, spec, tuple(inputs)))
        return layer_id

    prev = emit("entry_conv", _conv3(channels * frames, res_channels), [INPUT_ID])
    for i in range(n_res):
        block_in = prev
        c1 = emit(f"res{i}_conv1", _conv3(res_channels, res_channels), [block_in])
        a1 = emit(f"res{i}_lrelu", LayerSpec(kind="leaky_relu"), [c1])
        c2 = emit(f"res{i}_conv2", _conv3(res_channels, res_channels), [a1])
        prev = emit(f"res{i}_add", LayerSpec(kind="add"), [c2, block_in])

    stages = scale.bit_length() - 1
    current_ch = res_channels
    for s in range(stages):
        conv_out = 4 * up_channels if s == 0 else up_channels
        if conv_out % 4 != 0:
            raise GraphError(
                f"upsample stage {s}: conv width {conv_out} not divisible by 4"
            )
        c = emit(f"up{s}_conv", _conv3(current_ch, conv_out), [prev])
        p = emit(f"up{s}_shuffle", LayerSpec(kind="pixel_shuffle", factor=2), [c])
        prev = emit(f"up{s}_lrelu", LayerSpec(kind="leaky_relu"), [p])
        current_ch = conv_out // 4

    emit("exit_conv", _conv3(current_ch, 1), [prev])

    return ArchitectureGraph(
        nodes=tuple(nodes),
        input_height=height,
        input_width=width,
        input_channels=channels,
        input_frames=frames,
        label=f"HO-FVSR {{{res_channels},{n_res},{up_channels}}}",
    )


def hofvsr_cost(
    res_channels: int,
    n_res: int,
    up_channels: int,
    scale: int = 4,
    in_shape: tuple[int, int, int, int] = (36, 36, 1, 3),
    space: SearchSpace | None = None,
) -> CostReport:
    graph = hofvsr_graph(res_channels, n_res, up_channels, scale, in_shape, space)
    assumptions = dict(HOFVSR_ASSUMPTIONS)
    assumptions["scale"] = scale
    return graph_cost(graph, assumptions)


def graph_from_dict(doc: object) -> ArchitectureGraph:
    """Parse the architecture description document."""
    if not isinstance(doc, dict):
        raise GraphError("architecture document must be an object")
    shape = doc.get("input_shape")
    if not isinstance(shape, dict):
        raise GraphError('architecture document needs an "input_shape" object')
    layers = doc.get("layers")
    if not isinstance(layers, list):
        raise GraphError('architecture document needs a "layers" list')
    nodes = []
    for i, entry in enumerate(layers):
        if not isinstance(entry, dict):
            raise GraphError(f"layers[{i}] must be an object")
        kind = entry.get("kind")
        if kind == "conv2d":
            kernel = entry.get("kernel", [0, 0])
            spec = LayerSpec(
                kind="conv2d",
                in_channels=entry.get("in_channels", 0),
                out_channels=entry.get("out_channels", 0),
                kernel_h=kernel[0],
                kernel_w=kernel[1],
                stride=entry.get("stride", 1),
                padding_mode=entry.get("padding", "same"),
                has_bias=entry.get("bias", True),
            )
        elif kind == "pixel_shuffle":
            spec = LayerSpec(kind="pixel_shuffle", factor=entry.get("factor", 0))
        else:
            spec = LayerSpec(kind=str(kind))
        nodes.append(
            GraphNode(str(entry.get("id", f"layer{i}")), spec, tuple(entry.get("inputs", [])))
        )
    return ArchitectureGraph(
        nodes=tuple(nodes),
        input_height=shape.get("height", 0),
        input_width=shape.get("width", 0),
        input_channels=shape.get("channels", 0),
        input_frames=shape.get("frames", 1),
        label=str(doc.get("label", "")),
    )


def load_graph(path: str | Path) -> ArchitectureGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return graph_from_dict(doc)
