'''
Exceptions raised by mfk

Every error carries a machine-readable `code` and an `exit_status` that the command line
interface uses: 2 for input that fails validation, 3 for numerical failures.
'''


class MFKError(Exception):
    code = 'mfk_error'
    exit_status = 1

    def as_dict(self):
        return {'error': self.code, 'message': str(self)}


class ValidationError(MFKError):
    ''' Inputs violate a precondition or a declared invariant '''
    code = 'validation_error'
    exit_status = 2


class NumericalError(MFKError):
    ''' A solver failed on otherwise valid input '''
    code = 'numerical_error'
    exit_status = 3


class InvariantViolation(ValidationError):
    code = 'invariant_violation'


class ConstraintViolation(InvariantViolation):
    code = 'constraint_violation'


class InvalidSpec(ValidationError):
    code = 'invalid_spec'


class BehindCamera(ValidationError):
    code = 'behind_camera'


class InsufficientViews(ValidationError):
    code = 'insufficient_views'


class InconsistentDetections(ValidationError):
    code = 'inconsistent_detections'


class DegenerateGeometry(NumericalError):
    code = 'degenerate_geometry'


class EmptySession(ValidationError):
    code = 'empty_session'


class DegenerateConfiguration(NumericalError):
    code = 'degenerate_configuration'


class LengthMismatch(ValidationError):
    code = 'length_mismatch'


class TooFewCorners(ValidationError):
    code = 'too_few_corners'


class NoDisplacement(ValidationError):
    code = 'no_displacement'


class RotationDetected(ValidationError):
    code = 'rotation_detected'


class InsufficientRotation(ValidationError):
    code = 'insufficient_rotation'


class NonConvergence(NumericalError):
    code = 'non_convergence'


class ModelViolation(NumericalError):
    code = 'model_violation'


class DimensionMismatch(ValidationError):
    code = 'dimension_mismatch'


class NoVisibleMarkers(ValidationError):
    code = 'no_visible_markers'


class NonDecreasingLoss(NumericalError):
    code = 'non_decreasing_loss'


class NoEvents(ValidationError):
    code = 'no_events'


class NoAnchor(ValidationError):
    code = 'no_anchor'


class NoNearbyJoint(ValidationError):
    code = 'no_nearby_joint'


class MissingBoundary(ValidationError):
    code = 'missing_boundary'


class TooShort(ValidationError):
    code = 'too_short'


class SchemaVersionMismatch(ValidationError):
    code = 'schema_version_mismatch'


class CorruptStream(ValidationError):
    code = 'corrupt_stream'
