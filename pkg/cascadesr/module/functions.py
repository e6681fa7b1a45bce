"""
Layer operations of the back-projection network on (batch, channels, height, width) tensors.

Forward passes are the torch primitives behind a shape check; the *_backward functions return
the exact gradients of a scalar loss through autograd, given the gradient of the loss with
respect to the layer output.
"""
import torch
import torch.nn.functional as F

from cascadesr.errors import ParameterError


def conv_output_size(n, kernel_size, stride, padding):
    return (n + 2 * padding - kernel_size) // stride + 1


def deconv_output_size(n, kernel_size, stride, padding):
    return (n - 1) * stride - 2 * padding + kernel_size


def _check_layer(input, weight, bias, stride, padding, in_dim):
    if input.dim() != 4:
        raise ParameterError(f'expected a 4-d input, got shape {tuple(input.shape)}')
    if weight.dim() != 4 or weight.size(2) != weight.size(3):
        raise ParameterError(f'expected square 4-d weights, got shape {tuple(weight.shape)}')
    if stride < 1 or padding < 0:
        raise ParameterError(f'invalid stride {stride} or padding {padding}')
    if input.size(1) != weight.size(in_dim):
        raise ParameterError(f'input has {input.size(1)} channels, weights expect {weight.size(in_dim)}')
    out_channels = weight.size(1 - in_dim)
    if bias is not None and bias.shape != (out_channels,):
        raise ParameterError(f'bias shape {tuple(bias.shape)} does not match {out_channels} output channels')


def conv2d(input, weight, bias=None, stride=1, padding=0):
    """
    Strided cross-correlation. weight: (out, in, k, k); (H + 2 * padding - k) must be a multiple of stride.
    """
    _check_layer(input, weight, bias, stride, padding, in_dim=1)
    k = weight.size(2)
    for n in input.shape[2:]:
        if n + 2 * padding < k or (n + 2 * padding - k) % stride != 0:
            raise ParameterError(f'size {n} is incompatible with kernel {k}, stride {stride}, padding {padding}')
    return F.conv2d(input, weight, bias, stride=stride, padding=padding)


def deconv2d(input, weight, bias=None, stride=1, padding=0):
    """
    Transposed convolution, the adjoint of conv2d with the same weights. weight: (in, out, k, k).
    """
    _check_layer(input, weight, bias, stride, padding, in_dim=0)
    k = weight.size(2)
    for n in input.shape[2:]:
        if deconv_output_size(n, k, stride, padding) < 1:
            raise ParameterError(f'size {n} is too small for kernel {k}, stride {stride}, padding {padding}')
    return F.conv_transpose2d(input, weight, bias, stride=stride, padding=padding)


def prelu(input, slopes):
    """x if x > 0 else slope * x, one slope per channel (or a single shared slope)."""
    if input.dim() < 2:
        raise ParameterError(f'expected a batched input, got shape {tuple(input.shape)}')
    if slopes.dim() != 1 or slopes.numel() not in (1, input.size(1)):
        raise ParameterError(f'{slopes.numel()} slopes for {input.size(1)} channels')
    return F.prelu(input, slopes)


def _vjp(fn, tensors, grad_output):
    present = [t is not None for t in tensors]
    leaves = [t.detach().requires_grad_() for t in tensors if t is not None]
    with torch.enable_grad():
        it = iter(leaves)
        output = fn(*[next(it) if p else None for p in present])
        if output.shape != grad_output.shape:
            raise ParameterError(f'grad_output shape {tuple(grad_output.shape)} != output shape {tuple(output.shape)}')
        grads = iter(torch.autograd.grad(output, leaves, grad_output))
    return tuple(next(grads) if p else None for p in present)


def conv2d_backward(input, weight, bias, grad_output, stride=1, padding=0):
    """Returns (grad_input, grad_weight, grad_bias); grad_bias is None when bias is None."""
    return _vjp(
        lambda x, w, b: conv2d(x, w, b, stride, padding), (input, weight, bias), grad_output
    )


def deconv2d_backward(input, weight, bias, grad_output, stride=1, padding=0):
    return _vjp(
        lambda x, w, b: deconv2d(x, w, b, stride, padding), (input, weight, bias), grad_output
    )


def prelu_backward(input, slopes, grad_output):
    """Returns (grad_input, grad_slopes)."""
    return _vjp(prelu, (input, slopes), grad_output)
