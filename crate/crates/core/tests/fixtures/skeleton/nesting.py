class Outer:
    """Outer docstring."""

    class Inner:
        def method(self):
            def helper():
                return 1

            return helper()

    attr = 1

    if attr:
        def conditional(self):
            return self.attr
    else:
        def conditional(self):
            return 0


if True:
    def module_conditional():
        pass

try:
    import json
except ImportError:
    def dumps(obj):
        return str(obj)


def outer():
    class Local:
        def m(self):
            return (
                1,
                2,
            )

    return Local
