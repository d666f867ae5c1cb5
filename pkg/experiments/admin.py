from django.contrib import admin
from .models import ExperimentRun, ResultRecord


class ResultRecordInline(admin.TabularInline):
    model = ResultRecord
    extra = 0
    fields = ['index', 'g', 'r', 'magnetization', 'order_parameter', 'gap', 'status']
    readonly_fields = fields
    can_delete = False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """
    Admin interface for ExperimentRun model.
    """
    list_display = [
        'kind',
        'config_hash',
        'seed',
        'status',
        'tool_version',
        'started_at',
        'finished_at',
    ]
    list_filter = ['kind', 'status', 'tool_version', 'started_at']
    search_fields = ['config_hash', 'output_dir', 'config_text']
    readonly_fields = ['config_hash', 'started_at', 'finished_at']
    inlines = [ResultRecordInline]

    fieldsets = (
        ('Experiment', {
            'fields': ('kind', 'seed', 'config_hash', 'tool_version')
        }),
        ('Configuration', {
            'fields': ('config_text', 'config_json'),
            'classes': ('collapse',)
        }),
        ('Outcome', {
            'fields': ('status', 'error_message', 'output_dir', 'started_at', 'finished_at')
        }),
    )


@admin.register(ResultRecord)
class ResultRecordAdmin(admin.ModelAdmin):
    list_display = ['run', 'index', 'g', 'r', 'magnetization', 'order_parameter', 'gap', 'status']
    list_filter = ['status', 'run__kind']
    search_fields = ['run__config_hash', 'error_message']

    def get_queryset(self, request):
        """
        Optimize queryset with select_related for the owning run.
        """
        return super().get_queryset(request).select_related('run')
