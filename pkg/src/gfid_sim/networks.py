"""Built-in network geometries (batch 1, padding folded into input sizes)."""
from __future__ import annotations

from .errors import UnknownNetworkError
from .layers import ConvLayerConfig as Conv
from .layers import FcLayerConfig as Fc
from .layers import NetworkDescriptor


def alexnet() -> NetworkDescriptor:
    # Layers 2, 4 and 5 keep the original two-group split.
    return NetworkDescriptor("alexnet", (
        Conv(227, 227, 3, 11, 11, 4, 96),
        Conv(31, 31, 96, 5, 5, 1, 256, groups=2),
        Conv(15, 15, 256, 3, 3, 1, 384),
        Conv(15, 15, 384, 3, 3, 1, 384, groups=2),
        Conv(15, 15, 384, 3, 3, 1, 256, groups=2),
        Fc(9216, 4096),
        Fc(4096, 4096),
        Fc(4096, 1000),
    ))


_VGG16_BLOCKS = [  # (spatial size, c_in, c_out, repeats)
    (224, 3, 64, 1), (224, 64, 64, 1),
    (112, 64, 128, 1), (112, 128, 128, 1),
    (56, 128, 256, 1), (56, 256, 256, 2),
    (28, 256, 512, 1), (28, 512, 512, 2),
    (14, 512, 512, 3),
]


def vgg16() -> NetworkDescriptor:
    layers = []
    for hw, c_in, c_out, repeats in _VGG16_BLOCKS:
        layers += [Conv(hw + 2, hw + 2, c_in, 3, 3, 1, c_out)] * repeats
    layers += [Fc(25088, 4096), Fc(4096, 4096), Fc(4096, 1000)]
    return NetworkDescriptor("vgg16", tuple(layers))


_RESNET50_STAGES = [  # (spatial size, bottleneck width, output width, blocks)
    (56, 64, 256, 3),
    (28, 128, 512, 4),
    (14, 256, 1024, 6),
    (7, 512, 2048, 3),
]


def resnet50() -> NetworkDescriptor:
    """The 49 scheduled conv layers plus the classifier.

    A stride-2 1x1 convolution equals subsampling followed by a stride-1
    1x1 convolution, so stage-entry layers are described on the already
    subsampled map. Projection shortcuts are not scheduled; their weights
    are carried in ``extra_conv_weights``.
    """
    layers = [Conv(229, 229, 3, 7, 7, 2, 64)]
    c_prev = 64
    shortcut_weights = 0
    for hw, mid, out, blocks in _RESNET50_STAGES:
        shortcut_weights += c_prev * out
        for _ in range(blocks):
            layers += [
                Conv(hw, hw, c_prev, 1, 1, 1, mid),
                Conv(hw + 2, hw + 2, mid, 3, 3, 1, mid),
                Conv(hw, hw, mid, 1, 1, 1, out),
            ]
            c_prev = out
    layers.append(Fc(2048, 1000))
    return NetworkDescriptor("resnet50", tuple(layers), extra_conv_weights=shortcut_weights)


BUILTIN_NETWORKS = {"alexnet": alexnet, "vgg16": vgg16, "resnet50": resnet50}


def builtin_network(name: str) -> NetworkDescriptor:
    try:
        return BUILTIN_NETWORKS[name.lower()]()
    except KeyError:
        raise UnknownNetworkError(
            f"unknown network {name!r}; choose from {sorted(BUILTIN_NETWORKS)}"
        ) from None
